#include "forge/error.hpp"

namespace forge {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::contract: return "contract";
    case ErrorKind::parse: return "parse";
    case ErrorKind::version: return "version";
    case ErrorKind::unsupported_layer: return "unsupported-layer";
    case ErrorKind::empty_insertion: return "empty-insertion";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ParseError::ParseError(const std::string& message, std::size_t offset)
    : Error(ErrorKind::parse, message + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

VersionError::VersionError(const std::string& format, int expected, int actual)
    : Error(ErrorKind::version, format + ": unsupported version " + std::to_string(actual) +
                                    " (expected " + std::to_string(expected) + ")") {}

UnsupportedLayerError::UnsupportedLayerError(const std::string& tag, std::size_t offset)
    : Error(ErrorKind::unsupported_layer,
            "unsupported layer tag '" + tag + "' (at byte " + std::to_string(offset) + ")") {}

NumericError::NumericError(const std::string& message, std::optional<std::size_t> index)
    : Error(ErrorKind::numeric, message), index_(index) {}

}  // namespace forge
