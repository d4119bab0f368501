#include "meshtally/tally_engine.hpp"

#include <span>

#include "meshtally/errors.hpp"
#include "meshtally/mesh.hpp"
#include "meshtally/particles.hpp"
#include "meshtally/search.hpp"
#include "meshtally/tally.hpp"

namespace meshtally {

struct TallyEngine::Impl {
    TetMesh mesh;
    ParticleBatch batch;
    TallyGrid grid;
    int threads = 0;
    std::int64_t localized = 0;
    std::int64_t last_events = 0;
    bool batch_open = false;

    Impl(const std::string& path, std::int64_t particles, int groups, int nthreads)
        : mesh(read_tet_mesh(path)),
          batch(create_batch(particles)),
          grid(create_grid(static_cast<std::int64_t>(mesh.num_elements()), groups)),
          threads(nthreads) {}
};

namespace {

struct EngineScorer {
    TallyGrid* grid;
    const ParticleBatch* batch;

    void operator()(const InterfaceEvent& ev, Decision&) const {
        const auto i = static_cast<std::size_t>(ev.particle);
        score_track_length(*grid, ev.element, batch->group[i], batch->weight[i], ev.segment_length);
    }
};

} // namespace

TallyEngine::TallyEngine(const std::string& mesh_filename, std::int64_t num_particles, int num_groups, int threads)
    : impl_(std::make_unique<Impl>(mesh_filename, num_particles, num_groups, threads)) {}

TallyEngine::~TallyEngine() = default;
TallyEngine::TallyEngine(TallyEngine&&) noexcept = default;
TallyEngine& TallyEngine::operator=(TallyEngine&&) noexcept = default;

void TallyEngine::initialize_particle_location(const double* init_particle_positions, std::int64_t size) {
    auto& m = *impl_;
    if (size < 0) throw ParameterError("negative particle count");
    const auto n = static_cast<std::size_t>(size);
    initialize_locations(m.mesh, m.batch, std::span<const double>(init_particle_positions, 3 * n), size, m.threads);
    m.localized = 0;
    for (std::size_t i = 0; i < n; ++i) m.localized += m.batch.alive[i] ? 1 : 0;
    m.batch_open = true;
}

void TallyEngine::move_to_next_location(const double* particle_destinations, const std::int8_t* flying,
                                        const double* weights, std::int64_t size, const std::int32_t* groups) {
    auto& m = *impl_;
    m.last_events = 0;
    if (size == 0) return;
    if (size < 0) throw ParameterError("negative particle count");
    const auto n = static_cast<std::size_t>(size);
    load_step(m.batch, std::span<const double>(particle_destinations, 3 * n), std::span<const std::int8_t>(flying, n),
              std::span<const double>(weights, n), size);
    if (groups) {
        for (std::size_t i = 0; i < n; ++i) {
            if (groups[i] < 0 || static_cast<std::size_t>(groups[i]) >= m.grid.num_groups)
                throw IndexError("energy group " + std::to_string(groups[i]) + " out of range");
            m.batch.group[i] = groups[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) m.batch.group[i] = 0;
    }
    const TraceSummary s = trace_batch(m.mesh, m.batch, EngineScorer{&m.grid, &m.batch}, m.threads);
    m.last_events = s.events;
    m.batch_open = true;
}

void TallyEngine::end_batch(double source_weight) {
    if (!impl_->batch_open) throw StateError("end_batch called with no batch in progress");
    finalize_batch(impl_->grid, source_weight);
    impl_->batch_open = false;
}

void TallyEngine::write(const std::string& filename) {
    auto& m = *impl_;
    if (m.batch_open) {
        finalize_batch(m.grid, m.localized > 0 ? static_cast<double>(m.localized) : 1.0);
        m.batch_open = false;
    }
    write_vtk(m.mesh, flux(m.grid, m.mesh.volumes), filename);
}

std::int64_t TallyEngine::num_elements() const { return static_cast<std::int64_t>(impl_->mesh.num_elements()); }
std::int64_t TallyEngine::batches_completed() const { return impl_->grid.batches_completed; }
double TallyEngine::pending_total() const { return batch_total(impl_->grid); }
std::int64_t TallyEngine::last_event_count() const { return impl_->last_events; }

std::int32_t TallyEngine::element_of(std::int64_t particle) const {
    if (particle < 0 || static_cast<std::size_t>(particle) >= impl_->batch.capacity)
        throw IndexError("particle index out of range");
    const auto i = static_cast<std::size_t>(particle);
    return impl_->batch.alive[i] ? impl_->batch.element[i] : kNoElement;
}

} // namespace meshtally
