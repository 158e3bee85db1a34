#pragma once

#include <stdexcept>
#include <string>

namespace isound {

// Bad input content: malformed files, inconsistent geometry, invalid arguments.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure: eigensolver stall, non-finite values where finite required.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace isound
