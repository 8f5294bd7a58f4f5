#pragma once

#include <stdexcept>
#include <string>

namespace stkm {

/// Failure classes surfaced to the command line as distinct exit codes.
enum class ErrorCategory { io, validation, shape, numerical };

const char *category_name(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string &what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string &what) : Error(ErrorCategory::io, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string &what) : Error(ErrorCategory::validation, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string &what) : Error(ErrorCategory::shape, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string &what) : Error(ErrorCategory::numerical, what) {}
};

} // namespace stkm
