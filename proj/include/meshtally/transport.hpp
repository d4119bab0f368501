#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "meshtally/baseline.hpp"
#include "meshtally/mesh.hpp"
#include "meshtally/particles.hpp"
#include "meshtally/rng.hpp"
#include "meshtally/tally.hpp"

namespace meshtally {

/// Multigroup macroscopic cross sections (cm^-1). sigma_s is row-major [from][to].
struct CrossSections {
    int num_groups = 1;
    std::vector<double> sigma_t;
    std::vector<double> sigma_s;

    double scatter(int from, int to) const {
        return sigma_s[static_cast<std::size_t>(from) * num_groups + static_cast<std::size_t>(to)];
    }
    double scatter_total(int from) const;

    static CrossSections single_group(double sigma_t, double sigma_s);
    // Throws ParameterError when sizes or values are inconsistent.
    void check() const;
};

enum class Backend { Adjacency, Baseline };

const char* backend_name(Backend b);

struct SourceBox {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{0.5, 0.5, 0.5};
};

struct RunConfig {
    int mesh_n = 10;
    double edge_length = 1.0;
    std::int64_t num_particles = 10000;
    int num_batches = 5;
    CrossSections cross_sections = CrossSections::single_group(100.0, 100.0);
    SourceBox source;
    // Monodirectional source when set; isotropic otherwise.
    std::optional<Vec3> source_direction;
    std::uint64_t seed = 42;
    Backend backend = Backend::Adjacency;
    int threads = 1;

    void check() const;
};

struct SourceSample {
    Vec3 position;
    Vec3 direction;
    int group = 0;
    double weight = 1.0;
};

Vec3 sample_isotropic(RngStream& rng);

SourceSample sample_source(RngStream& rng, const RunConfig& config);

// -ln(xi) / sigma_t for xi in (0, 1].
double collision_distance(double xi, double sigma_t);
double sample_collision_distance(RngStream& rng, double sigma_t);

struct CollisionOutcome {
    bool absorbed = false;
    int group = 0;
    Vec3 direction;
};

/// Analog collision: scatter with probability sum_g' sigma_s[g][g'] / sigma_t[g] into a
/// group drawn proportionally to sigma_s[g][.], isotropically; otherwise absorb.
/// Always consumes four draws so the stream position does not depend on the outcome.
CollisionOutcome sample_collision(RngStream& rng, const CrossSections& xs, int group);

enum class FlightOutcome : std::uint8_t { None, Collided, Leaked };

/// Per-batch particle state shared by both backends. Sized once for the batch capacity.
struct TransportState {
    ParticleBatch batch;
    std::vector<Vec3> flight_direction;
    std::vector<std::uint64_t> rng_draws;
    std::vector<FlightOutcome> outcome;
    std::vector<std::int32_t> queue;  // alive particles, first queue_size entries
    std::size_t queue_size = 0;
    std::vector<double> source_positions;

    explicit TransportState(std::int64_t capacity);
};

struct AdvanceCounts {
    std::int64_t collided = 0;
    std::int64_t leaked = 0;
    std::int64_t segments = 0;
    std::int64_t stuck_recoveries = 0;
};

/// Moves every queued particle to its next collision site (or out through the boundary)
/// with the adjacency walk, scoring track lengths into `track`.
AdvanceCounts advance_event(const TetMesh& mesh, TransportState& state, TallyGrid& track, const CrossSections& xs,
                            std::uint64_t seed, std::uint32_t batch_index, int threads);

/// Same event with per-segment k-d tree relocalization (baseline_trace).
AdvanceCounts advance_event_baseline(const TetMesh& mesh, const KdTree& tree, TransportState& state,
                                     TallyGrid& track, const CrossSections& xs, std::uint64_t seed,
                                     std::uint32_t batch_index, int threads);

struct RunSummary {
    double source_weight = 0.0;
    double leaked_weight = 0.0;
    double absorbed_weight = 0.0;
    std::int64_t collisions = 0;
    std::int64_t flights = 0;
    std::int64_t segments = 0;
    std::int64_t stuck_recoveries = 0;
    double track_length = 0.0;  // weighted, all batches
    double t_init = 0.0;        // seconds: mesh, search structures, buffers
    double t_localize = 0.0;    // seconds: source localization, all batches
    double t_batch = 0.0;       // seconds: all active batches (source, transport, tally)
    std::vector<std::int64_t> batch_allocations;  // empty when the probe is unavailable
    std::uint64_t peak_bytes = 0;
    int threads = 1;
};

struct RunResult {
    TetMesh mesh;
    FluxResult track_length;
    FluxResult collision;
    RunSummary summary;
};

/// Event-based fixed-source driver. Batches run in sequence; within a batch, source
/// sampling, localization, advance and collision phases are data parallel over
/// particles with a barrier between phases.
class Simulation {
public:
    explicit Simulation(RunConfig config);
    ~Simulation();

    void run_batch();
    int batches_done() const { return batches_done_; }

    const TetMesh& mesh() const { return mesh_; }
    const TallyGrid& track_grid() const { return track_; }
    const TallyGrid& collision_grid() const { return collision_; }
    const RunSummary& summary() const { return summary_; }
    const RunConfig& config() const { return config_; }

    RunResult finish() &&;

private:
    void start_batch(std::uint32_t batch_index);

    RunConfig config_;
    TetMesh mesh_;
    std::unique_ptr<KdTree> tree_;
    TransportState state_;
    TallyGrid track_;
    TallyGrid collision_;
    RunSummary summary_;
    int batches_done_ = 0;
};

RunResult run(const RunConfig& config);

} // namespace meshtally
