#pragma once

#include <stdexcept>
#include <string>

namespace phmmw {

/// Every failure raised by the library carries a short machine-readable code
/// (e.g. "RaggedAlignment") next to the human message. The CLI prints both as
/// `code: message`.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Errors caused by bad user input (exit code 1 in the CLI). Anything else
/// derived from Error is treated as internal.
class InputError : public Error {
public:
    using Error::Error;
};

[[noreturn]] inline void fail_input(const std::string& code, const std::string& message) {
    throw InputError(code, message);
}

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace phmmw
