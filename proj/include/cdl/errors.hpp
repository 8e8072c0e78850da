#pragma once

#include <stdexcept>
#include <string>

namespace cdl {

enum class ErrorCode {
  validation,
  degenerate_geometry,
  degenerate_elimination,
  invalid_input,
  no_solution,
  not_spd,
  undefined_los,
  io,
};

const char* to_string(ErrorCode code);

// Base of every error thrown by the library. The code is what callers switch on;
// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCode::validation, what) {}
};

class DegenerateGeometryError : public Error {
 public:
  explicit DegenerateGeometryError(const std::string& what)
      : Error(ErrorCode::degenerate_geometry, what) {}
};

}  // namespace cdl
