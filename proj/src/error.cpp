#include "fame/error.hpp"

namespace fame {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format";
    case ErrorKind::Duplication: return "duplication";
    case ErrorKind::Label: return "label";
    case ErrorKind::Coverage: return "coverage";
    case ErrorKind::DegenerateLabels: return "degenerate-labels";
    case ErrorKind::Archive: return "archive";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Scoring: return "scoring";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Auth: return "auth";
    case ErrorKind::Window: return "window";
    case ErrorKind::Limit: return "limit";
    case ErrorKind::State: return "state";
  }
  return "unknown";
}

}  // namespace fame
