#pragma once

#include <stdexcept>
#include <string>

namespace din {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not satisfy an op's shape rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced, or a quantity that must be finite/positive is not.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// API misuse: bad arguments, calling backward twice, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input data is malformed, missing or unusable.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace din
