#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fame {

enum class ErrorKind {
  Format,            // malformed line / field
  Duplication,       // repeated id where uniqueness is required
  Label,             // ground-truth label outside {0,1}
  Coverage,          // id required by the keys but absent from the scores
  DegenerateLabels,  // ground truth with only one label class
  Archive,           // unreadable or inconsistent zip
  Arity,             // wrong number of entries (e.g. grid without 4 EERs)
  Shape,             // tensor dimension mismatch
  Scoring,           // numerically unusable score request (zero-norm projection)
  Config,            // invalid configuration value
  Io,                // file system failure
  Auth,              // unknown team / bad credential
  Window,            // submission outside the active phase window
  Limit,             // submission quota exhausted
  State,             // service in a state that cannot serve the request
};

std::string_view to_string(ErrorKind kind);

// Exception carrying a machine-checkable kind plus optional context:
// the physical line number of the offending input and/or the offending
// token (a pair id, filename, path, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Error(ErrorKind kind, std::string message, int line)
      : std::runtime_error(std::move(message)), kind_(kind), line_(line) {}
  Error(ErrorKind kind, std::string message, std::string token, int line = 0)
      : std::runtime_error(std::move(message)),
        kind_(kind),
        line_(line),
        token_(std::move(token)) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }  // 1-based, 0 when not applicable
  const std::string& token() const { return token_; }

 private:
  ErrorKind kind_;
  int line_ = 0;
  std::string token_;
};

}  // namespace fame
