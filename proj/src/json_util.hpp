#pragma once

// Strict JSON plumbing shared by the file readers: exact key sets, typed
// accessors, and errors that carry the file path and line.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamacc/error.hpp"

namespace slamacc::jsonio {

using nlohmann::json;

// Reads a whole file; IoError if it cannot be opened.
std::string read_text_file(const std::string& path);

// Writes a whole file; IoError if it cannot be created.
void write_text_file(const std::string& path, const std::string& text);

// Parses a whole-file JSON document; ParseError with the line computed from
// the failing byte offset.
json parse_document(const std::string& path);

// Parses one JSON-Lines line.
json parse_line(const std::string& text, const std::string& path, long line);

// Requires j to be an object holding exactly the given keys.
void expect_keys(const json& j, std::initializer_list<const char*> keys,
                 const std::string& path, long line);

// Same, but the second list may be absent.
void expect_keys(const json& j, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional, const std::string& path,
                 long line);

double get_num(const json& j, const char* key, const std::string& path, long line);
double get_finite(const json& j, const char* key, const std::string& path, long line);
int64_t get_int(const json& j, const char* key, const std::string& path, long line);
uint64_t get_uint(const json& j, const char* key, const std::string& path, long line);
bool get_bool(const json& j, const char* key, const std::string& path, long line);
std::string get_str(const json& j, const char* key, const std::string& path, long line);

// Fixed-length array of finite numbers.
std::vector<double> get_num_array(const json& j, const char* key, size_t n,
                                  const std::string& path, long line);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace slamacc::jsonio
