#pragma once

#include <stdexcept>
#include <string>

namespace meshtally {

// Bad argument values (sizes, counts, cross sections).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Non-conforming or corrupt mesh input.
struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation called in the wrong lifecycle state (e.g. flux before any batch).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace meshtally
