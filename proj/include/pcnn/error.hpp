#pragma once

#include <stdexcept>
#include <string>

namespace pcnn {

// Error taxonomy used across the library. Shape/argument/state/numeric
// errors indicate caller bugs or bad input values; io/format/validation
// errors indicate problems with external files.

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class ArgumentError : public Error {
public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

class StateError : public Error {
public:
  explicit StateError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace pcnn
