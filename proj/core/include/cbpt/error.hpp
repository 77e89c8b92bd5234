#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cbpt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
public:
    explicit FileNotFound(const std::string& path)
        : Error("file not found: " + path), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A cell that should hold a finite number does not. Row and column are
/// 1-based positions in the source file (the header is row 1).
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : Error("parse error at row " + std::to_string(row) + ", column " +
                std::to_string(column) + ": " + what),
          row_(row), column_(column) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Raised when a base estimator is no better than chance.
class WeakLearnerError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Model document could not be read back (bad JSON, wrong version, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace cbpt
