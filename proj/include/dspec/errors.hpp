#pragma once

#include <stdexcept>
#include <string>

namespace dspec {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind { Invalid, Numerical, Undecidable, Usage };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& code, const std::string& message)
{
    throw Error(kind, code, code + ": " + message);
}

[[noreturn]] inline void invalid(const std::string& code, const std::string& message)
{
    fail(ErrorKind::Invalid, code, message);
}

[[noreturn]] inline void numerical(const std::string& code, const std::string& message)
{
    fail(ErrorKind::Numerical, code, message);
}

[[noreturn]] inline void undecidable(const std::string& code, const std::string& message)
{
    fail(ErrorKind::Undecidable, code, message);
}

}  // namespace dspec
