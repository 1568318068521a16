#pragma once

#include <stdexcept>
#include <string>

namespace mindface {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (bad dimension, bad permutation, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// Session operation attempted in a stage that does not allow it.
class OutOfStage : public Error {
 public:
  using Error::Error;
};

class SamplingFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mindface
