#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace xmh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition: bad shapes, out-of-range values, non-finite data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A metric is undefined for this query (e.g. no relevant gallery items).
class UndefinedQuery : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. offset() is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace xmh
