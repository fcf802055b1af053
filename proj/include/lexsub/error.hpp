#pragma once

#include <stdexcept>
#include <string>

namespace lexsub {

// Each kind maps to a distinct CLI exit code.
enum class ErrorKind {
  kInvalidArgument = 2,
  kMissingInput = 3,
  kSchema = 4,
  kDegenerate = 5,
  kNumerical = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

const char* error_kind_name(ErrorKind kind);

}  // namespace lexsub
