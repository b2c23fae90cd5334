#pragma once

#include <stdexcept>
#include <string>

namespace levy {

enum class ErrorCode {
    invalid_argument = 1,
    domain = 2,
    not_converged = 3,
    numerical = 4,
    io = 5,
};

// All library failures are reported as levy::Error. The C API maps the code
// one-to-one onto lb_status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, double value = 0.0)
        : std::runtime_error(what), code_(code), value_(value) {}

    ErrorCode code() const noexcept { return code_; }

    // Carries a diagnostic number where one exists (last residual for
    // non-convergence, a suggested time step for stability failures).
    double value() const noexcept { return value_; }

private:
    ErrorCode code_;
    double value_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what, double value = 0.0) {
    throw Error(code, what, value);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::invalid_argument, what);
}

} // namespace levy
