#pragma once

#include <stdexcept>
#include <string>

namespace papilla {

/// Base of all library errors. The CLI maps the subclass to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, tables, arguments out of range).
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a result (degenerate geometry, size guard).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace papilla
