#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lod {

/// Precondition violated by the caller (bad cardinality, out-of-range state,
/// non-divisible block size, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity could not be evaluated under the active support policy, e.g. a
/// zero probability under ln() in strict mode.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " (state index " + std::to_string(index) + ")"),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Operation requested on a model kind that does not support it.
class UnsupportedKind : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input file. `offset` is the byte position where decoding failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace lod
