#pragma once

#include <cstdint>
#include <span>

#include "meshtally/errors.hpp"
#include "meshtally/geometry.hpp"
#include "meshtally/mesh.hpp"
#include "meshtally/parallel.hpp"
#include "meshtally/particles.hpp"

namespace meshtally {

// InterfaceEvent::exit_face values other than a local face id.
inline constexpr int kExitDestination = -1;  // segment ends at the particle's destination
inline constexpr int kExitBoundary = -2;     // segment ends on a domain boundary face
inline constexpr int kExitRecovered = -3;    // stuck-recovery nudge that stayed in the element

// Distance a stuck particle is pushed along its direction before re-testing (cm).
inline constexpr double kStuckNudge = 1e-9;
// entry_face value recorded after a recovery push; a second stuck step gives up.
inline constexpr int kAfterNudge = -2;

/// One straight piece of a particle path that lies inside a single element.
struct InterfaceEvent {
    std::int32_t particle = 0;
    ElementId element = kNoElement;
    int exit_face = kExitDestination;
    int local_face = kNoFace;  // face actually crossed (also set for boundary exits)
    Vec3 segment_start;
    Vec3 segment_end;
    double segment_length = 0.0;
};

/// Writable part of the callback contract. The walker fills in its default choice before
/// the callback runs: the neighbor element and done=false for an interior crossing,
/// done=true on reaching the destination or the boundary. The callback may redirect the
/// particle, kill it, or resurrect it.
struct Decision {
    ElementId next_element = kNoElement;
    bool particle_done = false;
};

struct TraceSummary {
    std::int64_t sweeps = 0;
    std::int64_t events = 0;
    std::int64_t boundary_exits = 0;
    std::int64_t stuck_recoveries = 0;
    std::int64_t force_terminated = 0;
};

struct NoOpCallback {
    void operator()(const InterfaceEvent&, Decision&) const {}
};

namespace detail {

enum class StepKind : std::int8_t { Reached, Cross, Boundary, Relocated, Nudged, Terminated };

struct Step {
    StepKind kind = StepKind::Terminated;
    int face = kNoFace;
    Vec3 point;
    ElementId next = kNoElement;  // Relocated: element the path continues in
};

// Geometry of one element step for particle state (elem, start, dest, entry),
// including the bounded recovery applied when no exit face is found.
Step locate_step(const TetMesh& mesh, ElementId elem, const Vec3& start, const Vec3& dest, int entry_face,
                 bool& recovered);

struct StepCounters {
    std::int64_t events = 0;
    std::int64_t boundary_exits = 0;
    std::int64_t stuck_recoveries = 0;
    std::int64_t force_terminated = 0;
};

template <class Callback>
inline void advance_particle(const TetMesh& mesh, ParticleBatch& batch, std::size_t i, Callback& callback,
                             StepCounters& counters) {
    const ElementId elem = batch.element[i];
    const Vec3 start = batch.position[i];
    bool recovered = false;
    const Step step = locate_step(mesh, elem, start, batch.destination[i], batch.entry_face[i], recovered);
    if (recovered) ++counters.stuck_recoveries;
    if (step.kind == StepKind::Terminated) {
        batch.flying[i] = 0;
        ++counters.force_terminated;
        return;
    }

    InterfaceEvent event;
    event.particle = static_cast<std::int32_t>(i);
    event.element = elem;
    event.local_face = step.face;
    event.segment_start = start;
    event.segment_end = step.point;
    event.segment_length = distance(start, step.point);

    Decision decision;
    FaceNeighbor natural;
    switch (step.kind) {
        case StepKind::Reached:
            event.exit_face = kExitDestination;
            decision = {elem, true};
            break;
        case StepKind::Cross:
            event.exit_face = step.face;
            natural = mesh.neighbor(elem, step.face);
            decision = {natural.element, false};
            break;
        case StepKind::Boundary:
            event.exit_face = kExitBoundary;
            decision = {kNoElement, true};
            break;
        case StepKind::Relocated:
            event.exit_face = kExitRecovered;
            decision = {step.next, false};
            break;
        case StepKind::Nudged:
            event.exit_face = kExitRecovered;
            decision = {elem, false};
            break;
        case StepKind::Terminated:
            break;
    }

    callback(event, decision);
    ++counters.events;

    batch.position[i] = step.point;
    if (decision.particle_done || decision.next_element == kNoElement) {
        batch.flying[i] = 0;
        if (step.kind == StepKind::Boundary) {
            batch.alive[i] = 0;
            ++counters.boundary_exits;
        } else if (decision.next_element != kNoElement) {
            batch.element[i] = decision.next_element;
        }
        return;
    }
    const bool follows_adjacency = step.kind == StepKind::Cross && decision.next_element == natural.element;
    batch.element[i] = decision.next_element;
    if (follows_adjacency)
        batch.entry_face[i] = natural.face;
    else
        batch.entry_face[i] = static_cast<std::int8_t>(
            step.kind == StepKind::Nudged || step.kind == StepKind::Relocated ? kAfterNudge : kNoFace);
}

inline void check_localized(const ParticleBatch& batch, std::size_t i) {
    if (batch.element[i] == kNoElement)
        throw StateError("particle " + std::to_string(i) + " is flying but has not been localized");
}

} // namespace detail

/// Lockstep adjacency walk. Each sweep moves every flying particle across at most one
/// element, calling `callback(const InterfaceEvent&, Decision&)` once per particle per
/// sweep; the sweep ends at a barrier. Particles are processed with OpenMP (`threads` <= 0
/// keeps the runtime default), so the callback must tolerate concurrent calls for
/// different particles. Per-particle event order is independent of the thread count.
///
/// `candidates`, when non-empty, lists the particle slots to consider instead of scanning
/// the whole batch for flying particles.
template <class Callback>
TraceSummary trace_batch(const TetMesh& mesh, ParticleBatch& batch, Callback&& callback, int threads = 0,
                         std::span<const std::int32_t> candidates = {}) {
    TraceSummary summary;
    std::size_t n = 0;
    auto& active = batch.active;
    if (candidates.empty()) {
        for (std::size_t i = 0; i < batch.capacity; ++i) {
            if (!batch.flying[i]) continue;
            detail::check_localized(batch, i);
            active[n++] = static_cast<std::int32_t>(i);
        }
    } else {
        for (std::int32_t i : candidates) {
            if (!batch.flying[i]) continue;
            detail::check_localized(batch, static_cast<std::size_t>(i));
            active[n++] = i;
        }
    }
    threads = resolve_threads(threads);

    while (n > 0) {
        ++summary.sweeps;
        std::int64_t events = 0, exits = 0, recoveries = 0, terminated = 0;
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (threads > 1) num_threads(threads) \
    reduction(+ : events, exits, recoveries, terminated)
        for (std::int64_t k = 0; k < count; ++k) {
            detail::StepCounters c;
            detail::advance_particle(mesh, batch, static_cast<std::size_t>(active[k]), callback, c);
            events += c.events;
            exits += c.boundary_exits;
            recoveries += c.stuck_recoveries;
            terminated += c.force_terminated;
        }
        summary.events += events;
        summary.boundary_exits += exits;
        summary.stuck_recoveries += recoveries;
        summary.force_terminated += terminated;

        std::size_t m = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (batch.flying[active[k]]) active[m++] = active[k];
        n = m;
    }
    return summary;
}

/// Serial reference for `trace_batch`: one thread, every sweep rescans the full batch.
template <class Callback>
TraceSummary trace_batch_serial(const TetMesh& mesh, ParticleBatch& batch, Callback&& callback) {
    TraceSummary summary;
    for (std::size_t i = 0; i < batch.capacity; ++i)
        if (batch.flying[i]) detail::check_localized(batch, i);

    detail::StepCounters c;
    bool any = true;
    while (any) {
        any = false;
        for (std::size_t i = 0; i < batch.capacity; ++i) {
            if (!batch.flying[i]) continue;
            if (!any) ++summary.sweeps;
            any = true;
            detail::advance_particle(mesh, batch, i, callback, c);
        }
    }
    summary.events = c.events;
    summary.boundary_exits = c.boundary_exits;
    summary.stuck_recoveries = c.stuck_recoveries;
    summary.force_terminated = c.force_terminated;
    return summary;
}

/// Finds the element holding each of the first `count` positions by starting every
/// particle at element 0's centroid and walking to the position. A point on shared
/// faces ends up in the lowest-numbered element containing it; points outside the mesh
/// leave the particle unlocalized and not alive. Slots past `count` are cleared.
void initialize_locations(const TetMesh& mesh, ParticleBatch& batch, std::span<const double> positions,
                          std::int64_t count, int threads = 0);

/// Lowest-numbered element containing `p` among the face-connected elements around
/// `start` that contain it (tolerance kBarycentricTol). Returns `start` if none do.
ElementId lowest_containing_element(const TetMesh& mesh, ElementId start, const Vec3& p);

} // namespace meshtally
