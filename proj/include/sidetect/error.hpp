#pragma once

#include <stdexcept>
#include <string>

namespace sidetect {

// Bad or missing input data (malformed files, precondition violations on data).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public DataError {
 public:
  using DataError::DataError;
};

class ConflictError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace sidetect
