#ifndef VALLEYWALK_ERRORS_HPP
#define VALLEYWALK_ERRORS_HPP

#include <stdexcept>

namespace valleywalk {

// Moment equation E[rho^s] = 1 has no root in the admissible range (0,2).
struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required moment blows up before the defining equation can be satisfied.
struct DivergentMomentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Discrete environment whose log-rho support sits on a lattice.
struct LatticeSupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An infinite tail sum could not be truncated with a certified remainder
// within the available window.
struct TruncationUncertified : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Window does not extend far enough for the requested functional.
struct WindowTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientExcursions : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Valley too narrow to carry conditioned transition probabilities.
struct DegenerateValley : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not defined for the model or parameter regime at hand.
struct MethodUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Step budget ran out mid-walk where no truncated-result channel exists.
struct BudgetExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace valleywalk

#endif
