#pragma once

#include <stdexcept>
#include <string>

namespace smartbrush {

enum class ErrorKind {
    InvalidArgument,
    ShapeMismatch,
    NotFound,
    Format,
    Io,
    Numerical,
    Conflict,
};

/// Single exception type for the library; `kind()` lets callers (CLI, HTTP)
/// map failures onto exit codes and status codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace smartbrush
