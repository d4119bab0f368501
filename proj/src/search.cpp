#include "meshtally/search.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace meshtally {

namespace detail {

namespace {

// Lowest-numbered element containing `target` among the face-connected elements around
// `start` that contain `anchor`. kNoElement if none does.
ElementId element_around(const TetMesh& mesh, ElementId start, const Vec3& anchor, const Vec3& target) {
    constexpr std::size_t kMaxStar = 128;
    constexpr double loose = 10.0 * kBarycentricTol;
    std::array<ElementId, kMaxStar> seen{};
    std::size_t nseen = 0;
    std::size_t head = 0;
    seen[nseen++] = start;
    ElementId best = point_in_tet(mesh.corners(start), target) ? start : kNoElement;
    while (head < nseen) {
        const ElementId e = seen[head++];
        for (int f = 0; f < 4; ++f) {
            const ElementId nb = mesh.neighbor(e, f).element;
            if (nb == kNoElement) continue;
            if (std::find(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(nseen), nb) !=
                seen.begin() + static_cast<std::ptrdiff_t>(nseen))
                continue;
            const Tet tet = mesh.corners(nb);
            if (!point_in_tet(tet, anchor, loose)) continue;
            if (nseen == kMaxStar) return best;
            seen[nseen++] = nb;
            if (point_in_tet(tet, target) && (best == kNoElement || nb < best)) best = nb;
        }
    }
    return best;
}

} // namespace

Step locate_step(const TetMesh& mesh, ElementId elem, const Vec3& start, const Vec3& dest, int entry_face,
                 bool& recovered) {
    const ExitResult exit = find_exit_face(mesh, elem, start, dest, entry_face);
    switch (exit.kind) {
        case ExitKind::ReachedDestination:
            return {StepKind::Reached, kNoFace, dest};
        case ExitKind::ExitFace: {
            const bool boundary = mesh.neighbor(elem, exit.face).is_boundary();
            return {boundary ? StepKind::Boundary : StepKind::Cross, exit.face, exit.point};
        }
        case ExitKind::Stuck:
            break;
    }

    // Recovery. The usual cause is a path running through an edge or vertex, so that it
    // only touches the current element. Look among the elements around the start point
    // for the one the path actually enters.
    // A second stuck step right after a recovery gives up.
    recovered = true;
    constexpr double loose = 10.0 * kBarycentricTol;
    const Tet tet = mesh.corners(elem);
    if (point_in_tet(tet, dest, loose)) return {StepKind::Reached, kNoFace, dest};
    if (entry_face == kAfterNudge) return {StepKind::Terminated, kNoFace, start};
    if (distance(start, dest) <= kStuckNudge) return {StepKind::Reached, kNoFace, dest};

    const Vec3 pushed = start + unit_direction(start, dest) * kStuckNudge;
    const ElementId ahead = element_around(mesh, elem, start, pushed);
    if (ahead == elem) return {StepKind::Nudged, kNoFace, pushed};
    if (ahead != kNoElement) return {StepKind::Relocated, kNoFace, start, ahead};

    // No element around the start point holds the pushed point: the path leaves the mesh
    // here, through an edge or vertex of the boundary.
    const Barycentric l = barycentric_coords(tet, pushed);
    const int face = static_cast<int>(std::min_element(l.begin(), l.end()) - l.begin());
    return {StepKind::Boundary, face, start};
}

} // namespace detail

ElementId lowest_containing_element(const TetMesh& mesh, ElementId start, const Vec3& p) {
    // Elements sharing a point form a face-connected star, small enough for a fixed buffer.
    constexpr std::size_t kMaxStar = 128;
    std::array<ElementId, kMaxStar> seen{};
    std::size_t nseen = 0;
    std::size_t head = 0;
    seen[nseen++] = start;
    ElementId best = start;
    while (head < nseen) {
        const ElementId e = seen[head++];
        for (int f = 0; f < 4; ++f) {
            const ElementId nb = mesh.neighbor(e, f).element;
            if (nb == kNoElement) continue;
            if (std::find(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(nseen), nb) !=
                seen.begin() + static_cast<std::ptrdiff_t>(nseen))
                continue;
            if (!point_in_tet(mesh.corners(nb), p)) continue;
            if (nseen == kMaxStar) return best;
            seen[nseen++] = nb;
            best = std::min(best, nb);
        }
    }
    return best;
}

void initialize_locations(const TetMesh& mesh, ParticleBatch& batch, std::span<const double> positions,
                          std::int64_t count, int threads) {
    if (count < 0 || static_cast<std::size_t>(count) > batch.capacity)
        throw ParameterError("cannot localize " + std::to_string(count) + " particles in a batch of capacity " +
                             std::to_string(batch.capacity));
    const auto n = static_cast<std::size_t>(count);
    if (positions.size() < 3 * n) throw ParameterError("position array is smaller than 3 * count");

    const ElementId trial = 0;
    const Vec3 start = mesh.centroids[trial];
    for (std::size_t i = 0; i < n; ++i) {
        batch.position[i] = start;
        batch.destination[i] = {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
        batch.direction[i] = unit_direction(start, batch.destination[i]);
        batch.element[i] = trial;
        batch.entry_face[i] = kNoFace;
        batch.alive[i] = 1;
        batch.flying[i] = 1;
    }
    for (std::size_t i = n; i < batch.capacity; ++i) {
        batch.element[i] = kNoElement;
        batch.flying[i] = 0;
        batch.alive[i] = 0;
    }

    trace_batch(mesh, batch, NoOpCallback{}, threads);

    for (std::size_t i = 0; i < n; ++i) {
        batch.entry_face[i] = kNoFace;
        if (!batch.alive[i] || !point_in_tet(mesh.corners(batch.element[i]), batch.destination[i],
                                             10.0 * kBarycentricTol)) {
            batch.element[i] = kNoElement;
            batch.alive[i] = 0;
            continue;
        }
        batch.position[i] = batch.destination[i];
        batch.element[i] = lowest_containing_element(mesh, batch.element[i], batch.position[i]);
    }
}

} // namespace meshtally
