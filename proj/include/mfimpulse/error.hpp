#pragma once

#include <stdexcept>
#include <string>

namespace mfimpulse {

/// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorKind {
    precondition,  // invalid input, violated model condition, infeasible price
    evaluation,    // non-finite integrand or potential at a named point
    convergence,   // a numerical routine did not reach its tolerance
    consistency,   // two independent routes disagree
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown when a tolerance is not met; carries the best estimate found.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double best_estimate)
        : Error(ErrorKind::convergence, what), best_estimate_(best_estimate) {}

    double best_estimate() const noexcept { return best_estimate_; }

private:
    double best_estimate_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::evaluation: return "evaluation";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::consistency: return "consistency";
    }
    return "unknown";
}

}  // namespace mfimpulse
