#pragma once

#include <stdexcept>
#include <string>

namespace telephone {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input file (corpus, chains, matrices, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A translator or scorer failed to produce a usable answer.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool transient = false)
      : Error(what), transient_(transient) {}

  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

/// The backend is misconfigured; retrying other sentences is pointless.
class SystemicBackendError : public BackendError {
 public:
  explicit SystemicBackendError(const std::string& what) : BackendError(what, false) {}
};

}  // namespace telephone
