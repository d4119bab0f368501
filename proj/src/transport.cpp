#include "meshtally/transport.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>

#include "meshtally/alloc_probe.hpp"
#include "meshtally/errors.hpp"
#include "meshtally/parallel.hpp"
#include "meshtally/search.hpp"

namespace meshtally {

double CrossSections::scatter_total(int from) const {
    double s = 0.0;
    for (int to = 0; to < num_groups; ++to) s += scatter(from, to);
    return s;
}

CrossSections CrossSections::single_group(double sigma_t, double sigma_s) {
    CrossSections xs{1, {sigma_t}, {sigma_s}};
    xs.check();
    return xs;
}

void CrossSections::check() const {
    if (num_groups < 1) throw ParameterError("need at least one energy group");
    const auto g = static_cast<std::size_t>(num_groups);
    if (sigma_t.size() != g) throw ParameterError("sigma_t must have one entry per group");
    if (sigma_s.size() != g * g) throw ParameterError("sigma_s must be a groups x groups matrix");
    for (double s : sigma_s)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ParameterError("scattering cross sections must be >= 0");
    for (int from = 0; from < num_groups; ++from) {
        if (!(sigma_t[from] > 0.0) || !std::isfinite(sigma_t[from]))
            throw ParameterError("total cross sections must be > 0");
        if (scatter_total(from) > sigma_t[from] * (1.0 + 1e-12))
            throw ParameterError("scattering exceeds the total cross section in group " + std::to_string(from));
    }
}

const char* backend_name(Backend b) { return b == Backend::Adjacency ? "adjacency" : "baseline"; }

void RunConfig::check() const {
    if (mesh_n < 1) throw ParameterError("mesh_n must be >= 1");
    if (!(edge_length > 0.0)) throw ParameterError("edge length must be positive");
    if (num_particles <= 0) throw ParameterError("particle count must be positive");
    if (num_particles > std::int64_t{1} << 31) throw ParameterError("particle count exceeds 2^31");
    if (num_batches <= 0) throw ParameterError("batch count must be positive");
    cross_sections.check();
    for (int k = 0; k < 3; ++k) {
        if (source.lo[k] > source.hi[k]) throw ParameterError("source box corners are inverted");
        if (source.lo[k] < 0.0 || source.hi[k] > edge_length)
            throw ParameterError("source box must lie inside the domain");
    }
    if (source_direction && !(norm(*source_direction) > 0.0))
        throw ParameterError("source direction must be nonzero");
}

Vec3 sample_isotropic(RngStream& rng) {
    const double mu = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    return {s * std::cos(phi), s * std::sin(phi), mu};
}

SourceSample sample_source(RngStream& rng, const RunConfig& config) {
    SourceSample s;
    const SourceBox& box = config.source;
    for (int k = 0; k < 3; ++k) s.position[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * rng.uniform();
    s.direction = sample_isotropic(rng);
    if (config.source_direction) s.direction = unit_direction({}, *config.source_direction);
    s.group = 0;
    s.weight = 1.0;
    return s;
}

double collision_distance(double xi, double sigma_t) {
    if (!(sigma_t > 0.0)) throw ParameterError("sigma_t must be positive");
    return -std::log(xi) / sigma_t;
}

double sample_collision_distance(RngStream& rng, double sigma_t) {
    return collision_distance(1.0 - rng.uniform(), sigma_t);
}

CollisionOutcome sample_collision(RngStream& rng, const CrossSections& xs, int group) {
    const double u_react = rng.uniform();
    const double u_group = rng.uniform();
    const Vec3 dir = sample_isotropic(rng);

    const double scatter = xs.scatter_total(group);
    CollisionOutcome out;
    out.direction = dir;
    out.group = group;
    if (!(u_react * xs.sigma_t[group] < scatter)) {
        out.absorbed = true;
        return out;
    }
    const double target = u_group * scatter;
    double cumulative = 0.0;
    for (int to = 0; to < xs.num_groups; ++to) {
        const double s = xs.scatter(group, to);
        if (s == 0.0) continue;
        out.group = to;  // last nonzero group covers rounding at the top end
        cumulative += s;
        if (target < cumulative) break;
    }
    return out;
}

TransportState::TransportState(std::int64_t capacity)
    : batch(create_batch(capacity)),
      flight_direction(static_cast<std::size_t>(capacity)),
      rng_draws(static_cast<std::size_t>(capacity), 0),
      outcome(static_cast<std::size_t>(capacity), FlightOutcome::None),
      queue(static_cast<std::size_t>(capacity), 0),
      source_positions(3 * static_cast<std::size_t>(capacity), 0.0) {}

namespace {

struct TrackLengthScorer {
    TallyGrid* grid;
    const ParticleBatch* batch;

    void operator()(const InterfaceEvent& ev, Decision&) const {
        const auto i = static_cast<std::size_t>(ev.particle);
        score_track_length(*grid, ev.element, batch->group[i], batch->weight[i], ev.segment_length);
    }
};

// Draws each queued particle's flight length and sets its destination.
void set_destinations(TransportState& state, const CrossSections& xs, std::uint64_t seed, std::uint32_t batch_index,
                      int threads) {
    auto& b = state.batch;
    const auto q = static_cast<std::int64_t>(state.queue_size);
#pragma omp parallel for schedule(static) if (threads > 1) num_threads(threads)
    for (std::int64_t k = 0; k < q; ++k) {
        const auto i = static_cast<std::size_t>(state.queue[k]);
        RngStream rng(seed, batch_index, static_cast<std::uint32_t>(i), state.rng_draws[i]);
        const double length = sample_collision_distance(rng, xs.sigma_t[b.group[i]]);
        state.rng_draws[i] = rng.draws();
        b.destination[i] = b.position[i] + state.flight_direction[i] * length;
        b.direction[i] = unit_direction(b.position[i], b.destination[i]);
        b.entry_face[i] = static_cast<std::int8_t>(kNoFace);
        b.flying[i] = 1;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

AdvanceCounts advance_event(const TetMesh& mesh, TransportState& state, TallyGrid& track, const CrossSections& xs,
                            std::uint64_t seed, std::uint32_t batch_index, int threads) {
    threads = resolve_threads(threads);
    set_destinations(state, xs, seed, batch_index, threads);
    auto& b = state.batch;
    const TraceSummary trace = trace_batch(mesh, b, TrackLengthScorer{&track, &b}, threads,
                                           std::span<const std::int32_t>(state.queue.data(), state.queue_size));

    AdvanceCounts counts;
    counts.segments = trace.events;
    counts.stuck_recoveries = trace.stuck_recoveries;
    for (std::size_t k = 0; k < state.queue_size; ++k) {
        const auto i = static_cast<std::size_t>(state.queue[k]);
        if (b.alive[i]) {
            state.outcome[i] = FlightOutcome::Collided;
            ++counts.collided;
        } else {
            state.outcome[i] = FlightOutcome::Leaked;
            ++counts.leaked;
        }
    }
    return counts;
}

AdvanceCounts advance_event_baseline(const TetMesh& mesh, const KdTree& tree, TransportState& state,
                                     TallyGrid& track, const CrossSections& xs, std::uint64_t seed,
                                     std::uint32_t batch_index, int threads) {
    threads = resolve_threads(threads);
    set_destinations(state, xs, seed, batch_index, threads);
    auto& b = state.batch;
    const auto q = static_cast<std::int64_t>(state.queue_size);
    std::int64_t segments = 0, collided = 0, leaked = 0;
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 64) if (threads > 1) num_threads(threads) \
    reduction(+ : segments, collided, leaked)
    for (std::int64_t k = 0; k < q; ++k) {
        const auto i = static_cast<std::size_t>(state.queue[k]);
        b.flying[i] = 0;
        try {
            const SegmentList list = baseline_trace(mesh, tree, b.position[i], b.destination[i]);
            for (const Segment& seg : list.segments)
                score_track_length(track, seg.element, b.group[i], b.weight[i], seg.length);
            segments += static_cast<std::int64_t>(list.segments.size());
            b.position[i] = list.end_point;
            if (list.reached_boundary) {
                b.alive[i] = 0;
                state.outcome[i] = FlightOutcome::Leaked;
                ++leaked;
            } else {
                b.element[i] = list.segments.back().element;
                state.outcome[i] = FlightOutcome::Collided;
                ++collided;
            }
        } catch (...) {
#pragma omp critical(meshtally_baseline_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return {collided, leaked, segments, 0};
}

Simulation::Simulation(RunConfig config)
    : config_((config.check(), std::move(config))), state_(config_.num_particles) {
    const auto t0 = std::chrono::steady_clock::now();
    alloc_probe::reset_peak();
    config_.threads = resolve_threads(config_.threads);
    mesh_ = build_cube_mesh(config_.mesh_n, config_.edge_length);
    if (config_.backend == Backend::Baseline) tree_ = std::make_unique<KdTree>(mesh_);
    track_ = create_grid(static_cast<std::int64_t>(mesh_.num_elements()), config_.cross_sections.num_groups);
    collision_ = create_grid(static_cast<std::int64_t>(mesh_.num_elements()), config_.cross_sections.num_groups);
    summary_.threads = config_.threads;
    summary_.batch_allocations.reserve(static_cast<std::size_t>(config_.num_batches));
    summary_.t_init = seconds_since(t0);
}

Simulation::~Simulation() = default;

void Simulation::start_batch(std::uint32_t batch_index) {
    auto& b = state_.batch;
    const std::int64_t n = config_.num_particles;
    const int threads = config_.threads;

#pragma omp parallel for schedule(static) if (threads > 1) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        RngStream rng(config_.seed, batch_index, static_cast<std::uint32_t>(i));
        const SourceSample s = sample_source(rng, config_);
        state_.source_positions[3 * u] = s.position.x;
        state_.source_positions[3 * u + 1] = s.position.y;
        state_.source_positions[3 * u + 2] = s.position.z;
        state_.flight_direction[u] = s.direction;
        state_.rng_draws[u] = rng.draws();
        state_.outcome[u] = FlightOutcome::None;
        b.group[u] = s.group;
        b.weight[u] = s.weight;
    }

    const auto t_loc = std::chrono::steady_clock::now();
    if (config_.backend == Backend::Adjacency) {
        initialize_locations(mesh_, b, state_.source_positions, n, threads);
    } else {
#pragma omp parallel for schedule(static) if (threads > 1) num_threads(threads)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            const Vec3 p{state_.source_positions[3 * u], state_.source_positions[3 * u + 1],
                         state_.source_positions[3 * u + 2]};
            const ElementId e = tree_->locate(p);
            b.position[u] = p;
            b.element[u] = e;
            b.alive[u] = e != kNoElement ? 1 : 0;
            b.flying[u] = 0;
        }
    }
    summary_.t_localize += seconds_since(t_loc);

    state_.queue_size = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        summary_.source_weight += b.weight[u];
        if (b.alive[u])
            state_.queue[state_.queue_size++] = static_cast<std::int32_t>(i);
        else
            summary_.leaked_weight += b.weight[u];
    }
}

void Simulation::run_batch() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto allocs_before = alloc_probe::snapshot().allocations;
    const double localize_before = summary_.t_localize;

    const auto batch_index = static_cast<std::uint32_t>(batches_done_);
    const CrossSections& xs = config_.cross_sections;
    const int threads = config_.threads;
    auto& b = state_.batch;

    start_batch(batch_index);
    double batch_source = 0.0;
    for (std::int64_t i = 0; i < config_.num_particles; ++i) batch_source += b.weight[static_cast<std::size_t>(i)];

    while (state_.queue_size > 0) {
        const AdvanceCounts adv =
            config_.backend == Backend::Adjacency
                ? advance_event(mesh_, state_, track_, xs, config_.seed, batch_index, threads)
                : advance_event_baseline(mesh_, *tree_, state_, track_, xs, config_.seed, batch_index, threads);
        summary_.flights += adv.collided + adv.leaked;
        summary_.segments += adv.segments;
        summary_.stuck_recoveries += adv.stuck_recoveries;

        const auto q = static_cast<std::int64_t>(state_.queue_size);
        double leaked = 0.0, absorbed = 0.0;
        std::int64_t collisions = 0;
#pragma omp parallel for schedule(static) if (threads > 1) num_threads(threads) \
    reduction(+ : leaked, absorbed, collisions)
        for (std::int64_t k = 0; k < q; ++k) {
            const auto i = static_cast<std::size_t>(state_.queue[k]);
            if (state_.outcome[i] == FlightOutcome::Leaked) {
                leaked += b.weight[i];
                continue;
            }
            const int g = b.group[i];
            score_collision(collision_, b.element[i], g, b.weight[i], xs.sigma_t[g]);
            ++collisions;
            RngStream rng(config_.seed, batch_index, static_cast<std::uint32_t>(i), state_.rng_draws[i]);
            const CollisionOutcome c = sample_collision(rng, xs, g);
            state_.rng_draws[i] = rng.draws();
            if (c.absorbed) {
                b.alive[i] = 0;
                absorbed += b.weight[i];
            } else {
                b.group[i] = c.group;
                state_.flight_direction[i] = c.direction;
            }
        }
        summary_.leaked_weight += leaked;
        summary_.absorbed_weight += absorbed;
        summary_.collisions += collisions;

        std::size_t m = 0;
        for (std::size_t k = 0; k < state_.queue_size; ++k)
            if (b.alive[state_.queue[k]]) state_.queue[m++] = state_.queue[k];
        state_.queue_size = m;
    }

    summary_.track_length += batch_total(track_);
    finalize_batch(track_, batch_source);
    finalize_batch(collision_, batch_source);
    ++batches_done_;

    if (alloc_probe::supported())
        summary_.batch_allocations.push_back(
            static_cast<std::int64_t>(alloc_probe::snapshot().allocations - allocs_before));
    summary_.t_batch += seconds_since(t0) - (summary_.t_localize - localize_before);
}

RunResult Simulation::finish() && {
    if (batches_done_ == 0) throw StateError("no batch has been run");
    summary_.peak_bytes = alloc_probe::snapshot().peak_bytes;
    RunResult result;
    result.track_length = flux(track_, mesh_.volumes);
    result.collision = flux(collision_, mesh_.volumes);
    result.summary = summary_;
    tree_.reset();
    result.mesh = std::move(mesh_);
    return result;
}

RunResult run(const RunConfig& config) {
    Simulation sim(config);
    for (int b = 0; b < config.num_batches; ++b) sim.run_batch();
    return std::move(sim).finish();
}

} // namespace meshtally
