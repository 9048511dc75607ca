#ifndef OWC_UTIL_ERROR_HPP
#define OWC_UTIL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace owc {

enum class ErrorCode {
  InvalidParameter,
  DegenerateGeometry,
  UnsupportedConfiguration,
  InvalidAllocation,
  Infeasible,
  ProblemTooLarge,
  DecodeFailure,
  ParseError,
  NumericError,
  TrainingFailure,
  IoError,
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace owc

#endif
