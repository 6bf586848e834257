#pragma once

#include <stdexcept>
#include <string>

namespace eventail {

enum class ErrorKind {
  kBehindCamera,
  kDegenerate,
  kInsufficientData,
  kUnobservable,
  kMissingImu,
  kParse,
  kValidation,
  kDomain,
  kConfig,
  kIo,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace eventail
