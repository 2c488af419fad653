#pragma once

#include <stdexcept>
#include <string>

namespace acid {

enum class ErrorCode {
  Ok = 0,
  InvalidArgument,
  NonFiniteState,
  EventToleranceNotMet,
  AllStatesZero,
  Nonstationary,
  SupportNotCovered,
  NotConverged,
  SingularKernel,
  LostNullcline,
  FilterBlowup,
  FileNotFound,
  ParseError,
  IoError,
  Internal,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::EventToleranceNotMet: return "EventToleranceNotMet";
    case ErrorCode::AllStatesZero: return "AllStatesZero";
    case ErrorCode::Nonstationary: return "Nonstationary";
    case ErrorCode::SupportNotCovered: return "SupportNotCovered";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularKernel: return "SingularKernel";
    case ErrorCode::LostNullcline: return "LostNullcline";
    case ErrorCode::FilterBlowup: return "FilterBlowup";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

/// Library-wide exception carrying a stable error code for the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace acid
