#pragma once

#include <stdexcept>
#include <string>

namespace fpme {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  domain = 1,     // argument outside the function's domain
  parameter,      // parameter combination not admissible (e.g. Gamma pole)
  precondition,   // caller violated a documented precondition
  convergence,    // series or quadrature failed to reach its tolerance
  instability,    // time stepper could not keep the field bounded
  infeasible,     // request cannot be satisfied (e.g. finite mass for infinite-mass family)
  io,
  parse,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace fpme
