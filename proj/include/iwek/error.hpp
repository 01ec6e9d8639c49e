#ifndef IWEK_ERROR_HPP
#define IWEK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace iwek {

// Bad input data: out-of-range values, malformed documents, degenerate
// datasets. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class NotFoundError : public DataError {
 public:
  using DataError::DataError;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace iwek

#endif  // IWEK_ERROR_HPP
