#pragma once

#include <cstdint>
#include <optional>
#include <utility>

namespace meshtally {

/// Process-wide counters fed by the replacement operator new/delete in alloc_probe.cpp.
/// Only C++ heap allocations are seen; direct malloc calls (e.g. inside the OpenMP
/// runtime) are not.
namespace alloc_probe {

struct Snapshot {
    std::uint64_t allocations = 0;
    std::uint64_t live_bytes = 0;
    std::uint64_t peak_bytes = 0;
};

bool supported();
Snapshot snapshot();
// Restarts the high-water mark at the current live byte count.
void reset_peak();

} // namespace alloc_probe

struct AllocationStats {
    std::uint64_t allocations = 0;
    std::uint64_t peak_bytes = 0;  // high-water mark of live heap bytes during the thunk
};

/// Runs `thunk` and reports the heap allocations it made, or nothing when the counting
/// allocator is not compiled in (the thunk still runs).
template <class Thunk>
std::optional<AllocationStats> allocation_probe(Thunk&& thunk) {
    if (!alloc_probe::supported()) {
        std::forward<Thunk>(thunk)();
        return std::nullopt;
    }
    alloc_probe::reset_peak();
    const auto before = alloc_probe::snapshot();
    std::forward<Thunk>(thunk)();
    const auto after = alloc_probe::snapshot();
    return AllocationStats{after.allocations - before.allocations, after.peak_bytes};
}

} // namespace meshtally
