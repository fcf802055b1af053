#include "lexsub/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lexsub/error.hpp"

namespace lexsub::io {
namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingInput, "cannot open input file: " + path);
  return in;
}

std::string location(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

}  // namespace

void read_jsonl(const std::string& path, const std::function<void(const Json&, std::size_t)>& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::kSchema, location(path, number) + ": invalid JSON: " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorKind::kSchema, location(path, number) + ": expected a JSON object");
    }
    fn(record, number);
  }
}

void write_jsonl(const std::string& path, const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  write_file(path, out);
}

void read_tsv(const std::string& path,
              const std::function<void(const std::vector<std::string>&, std::size_t)>& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(split(line, '\t'), number);
  }
}

std::vector<std::string> split(std::string_view text, char delimiter) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string read_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kMissingInput, "cannot write file: " + path);
  out << content;
  if (!out) throw Error(ErrorKind::kMissingInput, "failed writing file: " + path);
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

const Json& require(const Json& record, const char* field, const std::string& where) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw Error(ErrorKind::kSchema, where + ": missing field '" + field + "'");
  }
  return *it;
}

std::string require_string(const Json& record, const char* field, const std::string& where) {
  const auto& v = require(record, field, where);
  if (!v.is_string()) throw Error(ErrorKind::kSchema, where + ": field '" + field + "' must be a string");
  return v.get<std::string>();
}

double require_number(const Json& record, const char* field, const std::string& where) {
  const auto& v = require(record, field, where);
  if (!v.is_number()) throw Error(ErrorKind::kSchema, where + ": field '" + field + "' must be a number");
  return v.get<double>();
}

long long require_integer(const Json& record, const char* field, const std::string& where) {
  const auto& v = require(record, field, where);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d) return static_cast<long long>(d);
  }
  throw Error(ErrorKind::kSchema, where + ": field '" + field + "' must be an integer");
}

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorKind::kSchema, where + ": not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_integer(std::string_view text, const std::string& where) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kSchema, where + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace lexsub::io
