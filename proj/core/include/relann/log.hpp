// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Line-delimited structured logging. Every record is one JSON object:
//   {"level":"warn","event":"clamped_confidence", ...fields}
// Records go to stderr unless a sink is installed.
namespace relann::log {

enum class Level { debug, info, warn, error };

std::string_view to_string(Level level);

using Sink = std::function<void(Level, const nlohmann::json& record)>;

// Replaces the process-wide sink and returns the previous one. An empty
// sink restores the stderr default.
Sink set_sink(Sink sink);

void set_min_level(Level level);

void emit(Level level, std::string_view event, nlohmann::json fields = nlohmann::json::object());

inline void info(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
  emit(Level::info, event, std::move(fields));
}
inline void warn(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
  emit(Level::warn, event, std::move(fields));
}
inline void error(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
  emit(Level::error, event, std::move(fields));
}

// Installs a capturing sink for the lifetime of the object. Used by tests
// that assert on warnings.
class ScopedCapture {
 public:
  ScopedCapture();
  ~ScopedCapture();
  ScopedCapture(const ScopedCapture&) = delete;
  ScopedCapture& operator=(const ScopedCapture&) = delete;

  std::vector<nlohmann::json> records() const;
  std::size_t count(std::string_view event) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
  Sink previous_;
};

}  // namespace relann::log
