#pragma once

#include <stdexcept>
#include <string>

namespace fkg {

enum class Errc {
    invalid_argument = 1,
    empty_domain,
    size_limit,
    config,
    io,
    verification,
    mismatch,
    numeric,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace fkg
