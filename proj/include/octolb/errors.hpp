#pragma once

#include <stdexcept>
#include <string>

namespace octolb {

/// Invalid geometric input (degenerate box, bad extents).
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A block id does not name an existing leaf / grid position.
struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RefinementError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoarseningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Value outside an operation's admissible range.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cross-structure mismatch (assignment does not cover the forest, ...).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config rejected; message carries the offending field path(s).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace octolb
