#pragma once

#include <stdexcept>
#include <string>

namespace depts {

/// Malformed or inconsistent input data (files, splits, shapes of user data).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable numerical state.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace depts
