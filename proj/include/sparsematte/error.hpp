#pragma once

#include <stdexcept>
#include <string>

namespace sparsematte {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad dimensions, empty label set, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File could not be read, decoded or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sparsematte
