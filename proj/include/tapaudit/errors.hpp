#pragma once

#include <stdexcept>
#include <string>

namespace tapaudit {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the HTTP layer and the CLI switch on the subtype.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument outside the operation's domain (negative size, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input document or request failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

enum class CaptureFailure {
  connection,    // engine endpoint unreachable or socket dropped
  session,       // emulation / target setup rejected
  navigation,    // navigation reported an error
  load_timeout,  // load event did not arrive in time
  protocol,      // malformed or error reply from the engine
};

const char* to_string(CaptureFailure kind);

class CaptureError : public Error {
 public:
  CaptureError(CaptureFailure kind, const std::string& message)
      : Error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  CaptureFailure kind() const noexcept { return kind_; }

 private:
  CaptureFailure kind_;
};

// Wraps a failure inside one analyzer stage so the caller can report which
// stage aborted the pipeline.
class AnalysisError : public Error {
 public:
  AnalysisError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace tapaudit
