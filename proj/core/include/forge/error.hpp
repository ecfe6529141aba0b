#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace forge {

enum class ErrorKind {
  dimension,
  contract,
  parse,
  version,
  unsupported_layer,
  empty_insertion,
  numeric,
  io,
  config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every error thrown by the library. The kind drives the
/// exit-code mapping of the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error(ErrorKind::dimension, message) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message)
      : Error(ErrorKind::contract, message) {}
};

/// Malformed input file. `offset` is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class VersionError : public Error {
 public:
  VersionError(const std::string& format, int expected, int actual);
};

class UnsupportedLayerError : public Error {
 public:
  UnsupportedLayerError(const std::string& tag, std::size_t offset);
};

class EmptyInsertionError : public Error {
 public:
  explicit EmptyInsertionError(const std::string& message)
      : Error(ErrorKind::empty_insertion, message) {}
};

/// Non-finite values during training or attacks. `index` is the epoch or
/// the sample that produced them, when known.
class NumericError : public Error {
 public:
  NumericError(const std::string& message, std::optional<std::size_t> index = {});
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::config, message) {}
};

}  // namespace forge
