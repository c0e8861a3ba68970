#pragma once

#include <stdexcept>
#include <string>

namespace learnstory {

// Failure categories map one-to-one onto the CLI exit codes.
enum class ErrorKind {
  Config,   // exit 2
  Data,     // exit 3
  Storage,  // exit 4 (cache read/write)
  Runtime,  // exit 4
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Storage:
    case ErrorKind::Runtime: return 4;
  }
  return 4;
}

}  // namespace learnstory
