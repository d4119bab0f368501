#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meshtally/mesh.hpp"
#include "meshtally/vec3.hpp"

namespace meshtally {

/// Fixed-capacity structure-of-arrays particle store. Each particle's owning element is a
/// single integer; nothing is sorted by element. All arrays are sized once in
/// `create_batch`, so loading and tracing never allocate.
struct ParticleBatch {
    std::size_t capacity = 0;

    std::vector<Vec3> position;
    std::vector<Vec3> destination;
    std::vector<Vec3> direction;
    std::vector<double> weight;
    std::vector<std::int32_t> group;
    std::vector<ElementId> element;     // kNoElement when unlocalized
    std::vector<std::int8_t> entry_face;  // face crossed into the current element, -1 if none
    std::vector<std::uint8_t> flying;
    std::vector<std::uint8_t> alive;

    // Scratch for the walker's compacted list of flying particles.
    std::vector<std::int32_t> active;
};

ParticleBatch create_batch(std::int64_t capacity);

/// Sets destinations, flight flags and weights for particles [0, count). Directions are
/// recomputed. A flight request for a particle that is not alive is ignored.
/// `destinations` holds 3*count values (x, y, z per particle).
void load_step(ParticleBatch& batch, std::span<const double> destinations, std::span<const std::int8_t> flying,
               std::span<const double> weights, std::int64_t count);

std::size_t active_count(const ParticleBatch& batch);

} // namespace meshtally
