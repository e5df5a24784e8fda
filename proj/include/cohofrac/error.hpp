#pragma once

#include <stdexcept>
#include <string>

namespace cohofrac {

enum class ErrorKind {
  usage,        // bad arguments or parameters
  parse,        // malformed triangulation text
  validation,   // well-formed text describing an invalid triangulation
  numerical,    // solver non-convergence, degenerate shapes
  traversal,    // ray or camera left the hyperboloid / lost containment
  protocol,     // malformed frame-service message
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline Error usage_error(const std::string& what) {
  return Error(ErrorKind::usage, what);
}
inline Error validation_error(const std::string& what) {
  return Error(ErrorKind::validation, what);
}
inline Error numerical_error(const std::string& what) {
  return Error(ErrorKind::numerical, what);
}
inline Error traversal_error(const std::string& what) {
  return Error(ErrorKind::traversal, what);
}
inline Error protocol_error(const std::string& what) {
  return Error(ErrorKind::protocol, what);
}

}  // namespace cohofrac
