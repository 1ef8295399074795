#pragma once

#include <stdexcept>
#include <string>

namespace filter {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent dataset file / records.
class DatasetError : public Error {
public:
    explicit DatasetError(const std::string& what) : Error(what) {}
};

/// Numeric precondition violated (zero-norm vector, all-masked softmax, ...).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

/// A class prototype collapsed below the usable norm threshold.
class DegeneratePrototypeError : public NumericError {
public:
    explicit DegeneratePrototypeError(const std::string& what) : NumericError(what) {}
};

/// Checkpoint file is unreadable or incompatible.
class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& what) : Error(what) {}
};

/// Training aborted (non-finite loss or gradient).
class TrainError : public Error {
public:
    explicit TrainError(const std::string& what) : Error(what) {}
};

}  // namespace filter
