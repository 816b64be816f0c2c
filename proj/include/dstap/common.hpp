#pragma once

#include <stdexcept>
#include <string>

namespace dstap {

enum class ErrorKind {
    InvalidArgument,  // bad values, structural mismatches, domain violations
    Parse,            // malformed input file
    Io,               // filesystem failures
    Infeasible,       // disconnected OD pair, unreachable centroid
    Numerical,        // non-finite values, degenerate instances
    Unsupported,      // valid request outside the implemented scope
    Internal,         // invariant violation, driver sequencing bug
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* version() { return "0.1.0"; }

// Compensated (Kahan) accumulator; keeps gap metrics stable near 1e-6.
class KahanSum {
public:
    void add(double value) {
        double y = value - carry_;
        double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace dstap
