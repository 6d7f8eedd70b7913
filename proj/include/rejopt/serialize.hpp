#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <string>

#include "rejopt/dataset.hpp"
#include "rejopt/error.hpp"

namespace rejopt {

/// Whitespace-separated token reader for the flat-text model formats.
class TokenReader {
public:
    TokenReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

    std::string word()
    {
        std::string token;
        if (!(in_ >> token)) {
            error("unexpected end of input");
        }
        return token;
    }

    void expect(const std::string& token)
    {
        const std::string got = word();
        if (got != token) {
            error("expected '" + token + "', found '" + got + "'");
        }
    }

    void expect_version(int version)
    {
        const int got = integer();
        if (got != version) {
            error("unsupported format version " + std::to_string(got));
        }
    }

    double number()
    {
        const std::string token = word();
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            error("'" + token + "' is not a number");
        }
        return value;
    }

    int integer()
    {
        const std::string token = word();
        int value = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            error("'" + token + "' is not an integer");
        }
        return value;
    }

    std::size_t count()
    {
        const int v = integer();
        if (v < 0) {
            error("negative count");
        }
        return static_cast<std::size_t>(v);
    }

    [[noreturn]] void error(const std::string& what) const { fail(ErrorCode::Parse, what_ + ": " + what); }

private:
    std::istream& in_;
    std::string what_;
};

}  // namespace rejopt
