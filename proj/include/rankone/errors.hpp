#pragma once

#include <stdexcept>

namespace rankone {

// Bad arguments or unmet preconditions. CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pair/tuple census would exceed its configured guard. CLI exit code 2.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A structural invariant of constructed or loaded data failed. Exit code 1.
struct SpecViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A value is not in the requested descendant set.
struct NotADescendant : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Orbit evaluation needed a refinement past the last built stage.
struct StagesExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rankone
