// SPDX-License-Identifier: Apache-2.0
#include "relann/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace relann::log {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& current_sink() {
  static Sink sink;
  return sink;
}

std::atomic<int>& min_level() {
  static std::atomic<int> level{static_cast<int>(Level::info)};
  return level;
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  Sink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

void set_min_level(Level level) { min_level().store(static_cast<int>(level)); }

void emit(Level level, std::string_view event, nlohmann::json fields) {
  if (static_cast<int>(level) < min_level().load()) return;
  nlohmann::json record = nlohmann::json::object();
  record["level"] = to_string(level);
  record["event"] = event;
  if (fields.is_object()) {
    for (auto& [key, value] : fields.items()) record[key] = std::move(value);
  } else if (!fields.is_null()) {
    record["detail"] = std::move(fields);
  }

  std::lock_guard lock(sink_mutex());
  if (current_sink()) {
    current_sink()(level, record);
  } else {
    std::cerr << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

struct ScopedCapture::State {
  mutable std::mutex mutex;
  std::vector<nlohmann::json> records;
};

ScopedCapture::ScopedCapture() : state_(std::make_shared<State>()) {
  previous_ = set_sink([state = state_](Level, const nlohmann::json& record) {
    std::lock_guard lock(state->mutex);
    state->records.push_back(record);
  });
}

ScopedCapture::~ScopedCapture() { set_sink(std::move(previous_)); }

std::vector<nlohmann::json> ScopedCapture::records() const {
  std::lock_guard lock(state_->mutex);
  return state_->records;
}

std::size_t ScopedCapture::count(std::string_view event) const {
  std::lock_guard lock(state_->mutex);
  std::size_t n = 0;
  for (const auto& r : state_->records) {
    if (r.value("event", std::string{}) == event) ++n;
  }
  return n;
}

}  // namespace relann::log
