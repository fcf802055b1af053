#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lexsub::io {

using Json = nlohmann::json;

// Calls fn(record, line_number) for each non-empty line. Parse failures
// raise a schema error naming the file and line.
void read_jsonl(const std::string& path, const std::function<void(const Json&, std::size_t)>& fn);
void write_jsonl(const std::string& path, const std::vector<Json>& records);

// Tab-separated fields of each non-empty, non-'#' line.
void read_tsv(const std::string& path,
              const std::function<void(const std::vector<std::string>&, std::size_t)>& fn);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

// Field accessors that raise schema errors instead of json exceptions.
const Json& require(const Json& record, const char* field, const std::string& where);
std::string require_string(const Json& record, const char* field, const std::string& where);
double require_number(const Json& record, const char* field, const std::string& where);
long long require_integer(const Json& record, const char* field, const std::string& where);

double parse_double(std::string_view text, const std::string& where);
long long parse_integer(std::string_view text, const std::string& where);

}  // namespace lexsub::io
