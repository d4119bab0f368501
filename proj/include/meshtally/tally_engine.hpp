#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace meshtally {

/// Batched tally facade for a host transport code. Only standard types cross this
/// interface; the mesh, particle store and tally grid stay behind the pointer.
///
/// Typical cycle per batch: initialize_particle_location, then move_to_next_location once
/// per advance event, then end_batch. write() produces a VTK file of the flux.
class TallyEngine {
public:
    /// Loads a mesh in the plain-text tetmesh format and sizes every buffer for
    /// `num_particles` particles and `num_groups` energy groups.
    TallyEngine(const std::string& mesh_filename, std::int64_t num_particles, int num_groups = 1, int threads = 0);
    ~TallyEngine();
    TallyEngine(TallyEngine&&) noexcept;
    TallyEngine& operator=(TallyEngine&&) noexcept;

    /// Localizes `size` particles from 3*size coordinates.
    void initialize_particle_location(const double* init_particle_positions, std::int64_t size);

    /// Moves flying particles to their destinations (3*size coordinates) and scores the
    /// track length of every element crossed, weighted by `weights`. `groups` may be null
    /// (all group 0).
    void move_to_next_location(const double* particle_destinations, const std::int8_t* flying, const double* weights,
                               std::int64_t size, const std::int32_t* groups = nullptr);

    /// Closes the current batch, normalizing by `source_weight`. Throws StateError when no
    /// batch has been started.
    void end_batch(double source_weight);

    /// Writes the flux as legacy VTK. A batch still open is closed first, normalized by the
    /// number of particles localized in it.
    void write(const std::string& filename);

    std::int64_t num_elements() const;
    std::int64_t batches_completed() const;
    // Sum of all scores in the open batch.
    double pending_total() const;
    // Interface events processed by the most recent move_to_next_location.
    std::int64_t last_event_count() const;
    // Current element of particle i (-1 if unlocalized or gone through the boundary).
    std::int32_t element_of(std::int64_t particle) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace meshtally
