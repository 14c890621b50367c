#pragma once

#include <stdexcept>
#include <string>

namespace bmo {

// Invalid user input: bad grid, zero paths, malformed spec or config.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A closed-form bound was requested outside its validity domain.
struct BoundDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// The discretization cannot carry out a step (e.g. implicit step unsolvable).
struct SchemeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The Picard map failed to contract where the predicted factors say it must.
struct NonContractionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File output failed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bmo
