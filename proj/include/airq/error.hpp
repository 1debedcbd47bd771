#pragma once

#include <stdexcept>
#include <string>

namespace airq {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown pollutant, invalid breakpoint table, schema
/// problems, mismatched feature names.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bad or insufficient input data: unreadable files, missing headers,
/// empty frames, too few rows for a requested split.
class DataError : public Error {
public:
    using Error::Error;
};

/// Runtime failure during model training (e.g. non-finite loss).
class TrainError : public Error {
public:
    explicit TrainError(const std::string& msg, int epoch = -1)
        : Error(msg), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

}  // namespace airq
