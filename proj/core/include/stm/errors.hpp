#pragma once

#include <stdexcept>
#include <string>

namespace stm {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad index, shape, radius...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The caller asked for an inconsistent setup, e.g. STM training without anchors.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed or does not match the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace stm
