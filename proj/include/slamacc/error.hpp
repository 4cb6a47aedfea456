#pragma once

#include <stdexcept>
#include <string>

namespace slamacc {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or violated invariant. Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem problem (missing file, unwritable path). Maps to CLI exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; carries the offending path and line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : ValidationError(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}

  const std::string& path() const { return path_; }
  long line() const { return line_; }

 private:
  std::string path_;
  long line_;
};

}  // namespace slamacc
