#pragma once

#include <stdexcept>
#include <string>

namespace rejopt {

enum class ErrorCode {
    InvalidArgument = 1,
    Io,
    Parse,
    Training,
    DimensionMismatch,
};

/// Base exception for everything the library throws on its own account.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what)
{
    if (!condition) {
        fail(ErrorCode::InvalidArgument, what);
    }
}

}  // namespace rejopt
