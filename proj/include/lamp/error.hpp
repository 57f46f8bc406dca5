#pragma once

#include <stdexcept>
#include <string>

namespace lamp {

// Failure categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { validation = 2, io = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message)
        : Error(ErrorKind::validation, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message)
        : Error(ErrorKind::io, message) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& message)
        : Error(ErrorKind::numerical, message) {}
};

} // namespace lamp
