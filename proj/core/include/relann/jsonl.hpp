// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace relann::jsonl {

// Reads one JSON object per non-blank line. Throws SchemaError naming the
// file and line on malformed input.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path);

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const nlohmann::json&, std::size_t line)>& fn);

// Writes records in order, one compact object per line, with a trailing
// newline. The output is byte-stable for equal inputs.
void write_file(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& records);

void write_line(std::ostream& out, const nlohmann::ordered_json& record);

// Writes the whole string atomically (temp file + rename).
void write_text(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

// Field accessors that raise SchemaError with context instead of
// nlohmann's type_error.
std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where);
double require_number(const nlohmann::json& obj, const char* key, const std::string& where);

}  // namespace relann::jsonl
