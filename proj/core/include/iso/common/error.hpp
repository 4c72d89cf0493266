#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace iso {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument or configuration value violates its contract.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Function-domain violations (e.g. a probability outside (0,1)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry: behind-camera joints, coincident joints, zero-norm poses.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A model or dataset is structurally incompatible with the requested use.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary input. Carries the byte offset at which parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class MagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  VersionError(std::uint32_t found, std::uint32_t expected, std::uint64_t offset)
      : FormatError("unsupported format version " + std::to_string(found) + " (expected " +
                        std::to_string(expected) + ")",
                    offset),
        found_(found) {}

  std::uint32_t found() const noexcept { return found_; }

 private:
  std::uint32_t found_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iso
