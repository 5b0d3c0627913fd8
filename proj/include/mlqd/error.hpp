#pragma once

#include <stdexcept>
#include <string>

namespace mlqd {

/// Raised when an iterative solve fails to converge or a linear system is singular.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed or inconsistent run configuration.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mlqd
