#pragma once

#include <stdexcept>
#include <string>

namespace spinvmc {

enum class ErrorKind {
  invalid_geometry,
  unsupported_dimension,
  invalid_translation,
  unsupported_model,
  shape_mismatch,
  size_cap,
  zero_amplitude,
  insufficient_samples,
  missing_field,
  not_positive_definite,
  solver_failure,
  config_error,
  io_error,
  data_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) fail(kind, msg);
}

}  // namespace spinvmc
