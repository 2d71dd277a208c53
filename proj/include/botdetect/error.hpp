#pragma once

#include <stdexcept>
#include <string>

namespace botdetect {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File missing, unreadable or unwritable.
class IoError : public Error {
public:
    using Error::Error;
};

// Header/schema/label problems in input files.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Invalid user configuration (bad k, empty model list, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Input data that cannot support the requested operation:
// single-class data, empty output after cleansing, degenerate curves.
class DataError : public Error {
public:
    using Error::Error;
};

// Width or length mismatch between arguments.
class ShapeError : public Error {
public:
    using Error::Error;
};

class UnknownCategoryError : public Error {
public:
    UnknownCategoryError(std::string field, std::string token)
        : Error("unknown category '" + token + "' in field '" + field + "'"),
          field_(std::move(field)), token_(std::move(token)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& token() const noexcept { return token_; }

private:
    std::string field_;
    std::string token_;
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t epoch)
        : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
          epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

// A pipeline stage failed; carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace botdetect
