#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dronerad {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters that violate a documented invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a closed-form radar equation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text input; carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A capture whose length disagrees with its header. offset() is the first missing byte.
class TruncationError : public ParseError {
 public:
  TruncationError(const std::string& what, std::uint64_t frame_index, std::uint64_t expected_bytes,
                  std::uint64_t actual_bytes)
      : ParseError(what, actual_bytes),
        frame_index_(frame_index),
        expected_bytes_(expected_bytes),
        actual_bytes_(actual_bytes) {}

  std::uint64_t frame_index() const noexcept { return frame_index_; }
  std::uint64_t expected_bytes() const noexcept { return expected_bytes_; }
  std::uint64_t actual_bytes() const noexcept { return actual_bytes_; }

 private:
  std::uint64_t frame_index_;
  std::uint64_t expected_bytes_;
  std::uint64_t actual_bytes_;
};

/// A localization pipeline found nothing to localize in the frame.
class NoTargetError : public Error {
 public:
  using Error::Error;
};

}  // namespace dronerad
