#include "json_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slamacc::jsonio {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + path);
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed on " + path);
}

namespace {

long line_of_byte(const std::string& text, size_t byte) {
  size_t end = std::min(byte, text.size());
  return 1 + static_cast<long>(std::count(text.begin(), text.begin() + end, '\n'));
}

}  // namespace

json parse_document(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path, line_of_byte(text, e.byte), e.what());
  }
}

json parse_line(const std::string& text, const std::string& path, long line) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path, line, e.what());
  }
}

void expect_keys(const json& j, std::initializer_list<const char*> keys,
                 const std::string& path, long line) {
  expect_keys(j, keys, {}, path, line);
}

void expect_keys(const json& j, std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional, const std::string& path,
                 long line) {
  if (!j.is_object()) throw ParseError(path, line, "expected a JSON object");
  for (const char* k : required)
    if (!j.contains(k)) throw ParseError(path, line, std::string("missing key \"") + k + "\"");
  auto known = [&](const std::string& k) {
    auto match = [&](const char* want) { return k == want; };
    return std::find_if(required.begin(), required.end(), match) != required.end() ||
           std::find_if(optional.begin(), optional.end(), match) != optional.end();
  };
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!known(k)) throw ParseError(path, line, "unknown key \"" + k + "\"");
  }
}

double get_num(const json& j, const char* key, const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError(path, line, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

double get_finite(const json& j, const char* key, const std::string& path, long line) {
  double x = get_num(j, key, path, line);
  if (!std::isfinite(x)) throw ParseError(path, line, std::string("\"") + key + "\" must be finite");
  return x;
}

int64_t get_int(const json& j, const char* key, const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw ParseError(path, line, std::string("\"") + key + "\" must be an integer");
  return v.get<int64_t>();
}

uint64_t get_uint(const json& j, const char* key, const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned())
    throw ParseError(path, line, std::string("\"") + key + "\" must be a nonnegative integer");
  return v.get<uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_boolean())
    throw ParseError(path, line, std::string("\"") + key + "\" must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_string())
    throw ParseError(path, line, std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<double> get_num_array(const json& j, const char* key, size_t n,
                                  const std::string& path, long line) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != n)
    throw ParseError(path, line, std::string("\"") + key + "\" must be an array of " +
                                     std::to_string(n) + " numbers");
  std::vector<double> out;
  out.reserve(n);
  for (const json& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>()))
      throw ParseError(path, line,
                       std::string("\"") + key + "\" must hold finite numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace slamacc::jsonio
