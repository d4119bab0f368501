#include "meshtally/particles.hpp"

#include <string>

#include "meshtally/errors.hpp"

namespace meshtally {

ParticleBatch create_batch(std::int64_t capacity) {
    if (capacity <= 0) throw ParameterError("particle batch capacity must be positive, got " + std::to_string(capacity));
    const auto n = static_cast<std::size_t>(capacity);
    ParticleBatch batch;
    batch.capacity = n;
    batch.position.assign(n, Vec3{});
    batch.destination.assign(n, Vec3{});
    batch.direction.assign(n, Vec3{});
    batch.weight.assign(n, 0.0);
    batch.group.assign(n, 0);
    batch.element.assign(n, kNoElement);
    batch.entry_face.assign(n, -1);
    batch.flying.assign(n, 0);
    batch.alive.assign(n, 0);
    batch.active.assign(n, 0);
    return batch;
}

void load_step(ParticleBatch& batch, std::span<const double> destinations, std::span<const std::int8_t> flying,
               std::span<const double> weights, std::int64_t count) {
    if (count < 0 || static_cast<std::size_t>(count) > batch.capacity)
        throw ParameterError("load_step count " + std::to_string(count) + " exceeds batch capacity " +
                             std::to_string(batch.capacity));
    const auto n = static_cast<std::size_t>(count);
    if (destinations.size() < 3 * n || flying.size() < n || weights.size() < n)
        throw ParameterError("load_step arrays are smaller than the particle count");

    for (std::size_t i = 0; i < n; ++i) {
        batch.destination[i] = {destinations[3 * i], destinations[3 * i + 1], destinations[3 * i + 2]};
        batch.weight[i] = weights[i];
        batch.flying[i] = (flying[i] != 0 && batch.alive[i]) ? 1 : 0;
        batch.entry_face[i] = -1;
        batch.direction[i] = unit_direction(batch.position[i], batch.destination[i]);
    }
}

std::size_t active_count(const ParticleBatch& batch) {
    std::size_t n = 0;
    for (std::uint8_t f : batch.flying) n += f ? 1 : 0;
    return n;
}

} // namespace meshtally
