#pragma once

#include <stdexcept>
#include <string>

namespace mpct {

/// Base class of every error raised by the library.
class MpctError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public MpctError {
 public:
  using MpctError::MpctError;
};

class EmptySetError : public MpctError {
 public:
  using MpctError::MpctError;
};

class NotSchurError : public MpctError {
 public:
  using MpctError::MpctError;
};

class NoContainmentError : public MpctError {
 public:
  using MpctError::MpctError;
};

class EmptyTightenedError : public MpctError {
 public:
  using MpctError::MpctError;
};

class NoStabilizingSolutionError : public MpctError {
 public:
  using MpctError::MpctError;
};

class UnreachableReferenceError : public MpctError {
 public:
  using MpctError::MpctError;
};

class SingularCapacitanceError : public MpctError {
 public:
  using MpctError::MpctError;
};

class UnboundedError : public MpctError {
 public:
  using MpctError::MpctError;
};

}  // namespace mpct
