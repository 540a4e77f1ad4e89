#pragma once

#include <stdexcept>
#include <string>

namespace safari {

/// Broad failure category. The CLI maps each kind onto a distinct exit code.
enum class ErrorKind {
  usage,    // caller violated a precondition (bad argument, bad config)
  input,    // malformed or unreadable file, digest mismatch
  numeric,  // non-finite values, zero-norm vectors, degenerate statistics
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& what) {
  throw Error(ErrorKind::usage, what);
}
[[noreturn]] inline void throw_input(const std::string& what) {
  throw Error(ErrorKind::input, what);
}
[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorKind::numeric, what);
}

}  // namespace safari
