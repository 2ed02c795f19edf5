#pragma once

#include <stdexcept>
#include <string>

namespace effham {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model or configuration breaks a structural rule or a theorem assumption.
class ModelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Assembly or eigensolve failed on an otherwise valid model.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace effham
