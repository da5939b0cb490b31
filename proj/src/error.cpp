#include "fpme/error.hpp"

namespace fpme {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain error";
    case ErrorCode::parameter: return "parameter error";
    case ErrorCode::precondition: return "precondition violated";
    case ErrorCode::convergence: return "convergence failure";
    case ErrorCode::instability: return "numerical instability";
    case ErrorCode::infeasible: return "infeasible request";
    case ErrorCode::io: return "I/O error";
    case ErrorCode::parse: return "parse error";
  }
  return "unknown error";
}

}  // namespace fpme
