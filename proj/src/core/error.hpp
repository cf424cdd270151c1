#pragma once

#include <stdexcept>
#include <string>

namespace lcd {

enum class ErrorKind {
    Validation,  // malformed input or violated precondition
    Io,          // file could not be opened, read or written
    Budget,      // refused because of the configured memory budget
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) {
    throw Error(ErrorKind::Validation, what);
}

[[noreturn]] inline void fail_io(const std::string& what) {
    throw Error(ErrorKind::Io, what);
}

}  // namespace lcd
