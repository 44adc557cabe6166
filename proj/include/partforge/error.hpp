#pragma once

#include <stdexcept>
#include <string>

namespace partforge {

// Error categories map onto CLI exit codes: config -> 1, data -> 2, numeric -> 3.
enum class ErrorKind {
    shape,        // tensor/graph dimension mismatch
    domain,       // value outside its contract (t not in [0,1], empty point set, ...)
    capacity,     // slot or size exceeds a configured maximum
    contract,     // API misuse (non-scalar loss, per-part t, ...)
    parse,        // malformed input file
    unsupported,  // valid input requiring features we do not implement
    io,           // filesystem failure
    numeric,      // NaN/Inf where finite values are required
    config,       // bad run configuration
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace partforge
