#include "varopt/error.hpp"

namespace varopt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::OutOfBox: return "OutOfBox";
    case ErrorKind::InvalidExponent: return "InvalidExponent";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::InconclusiveProbe: return "InconclusiveProbe";
    case ErrorKind::MissingColumns: return "MissingColumns";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace varopt
