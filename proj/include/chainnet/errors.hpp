#pragma once

#include <stdexcept>

namespace chainnet {

// Malformed user input: files, fixtures, scenarios, CLI arguments.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A model invariant that should hold by construction was found violated.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace chainnet
