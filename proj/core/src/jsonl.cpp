// SPDX-License-Identifier: Apache-2.0
#include "relann/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "relann/errors.hpp"

namespace relann::jsonl {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const nlohmann::json&, std::size_t line)>& fn) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!value.is_object()) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": expected a JSON object");
    }
    fn(value, lineno);
  }
}

std::vector<nlohmann::json> read_file(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  for_each_line(path, [&](const nlohmann::json& v, std::size_t) { out.push_back(v); });
  return out;
}

void write_line(std::ostream& out, const nlohmann::ordered_json& record) {
  out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

void write_file(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& records) {
  std::ostringstream buf;
  for (const auto& r : records) write_line(buf, r);
  write_text(path, buf.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw SchemaError(where + ": field \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw SchemaError(where + ": field \"" + key + "\" must be a number");
  }
  return it->get<double>();
}

}  // namespace relann::jsonl
