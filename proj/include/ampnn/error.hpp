#ifndef AMPNN_ERROR_HPP
#define AMPNN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ampnn {

/// Failure categories. The CLI maps each one onto a distinct exit status.
enum class ErrorCategory { Domain, Validation, Io, Integrity, Divergence };

inline const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Validation: return "validation";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Integrity: return "integrity";
    case ErrorCategory::Divergence: return "divergence";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Non-finite input to a function that needs a finite argument, or an
/// argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::Domain, what) {}
};

/// A configuration value violates one of its invariants.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorCategory::Validation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

/// Loaded data disagrees with what it claims to contain.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorCategory::Integrity, what) {}
};

/// A forward pass, loss or gradient produced a non-finite value.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(ErrorCategory::Divergence, what) {}
};

}  // namespace ampnn

#endif  // AMPNN_ERROR_HPP
