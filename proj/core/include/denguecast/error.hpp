#pragma once

#include <stdexcept>
#include <string>

namespace denguecast {

/// Bad input: malformed files, invalid configuration, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical or pipeline failure on otherwise valid input.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public RuntimeFailure {
 public:
  RankDeficiencyError(std::string block, const std::string& what)
      : RuntimeFailure(what), block_(std::move(block)) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

class InsufficientHistoryError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace denguecast
