// Times the serial reference walk against the OpenMP walk on random flights through a
// cube mesh and checks that both produce the same track-length tally.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "meshtally/mesh.hpp"
#include "meshtally/parallel.hpp"
#include "meshtally/particles.hpp"
#include "meshtally/search.hpp"
#include "meshtally/tally.hpp"

namespace {

using namespace meshtally;

struct Scorer {
    TallyGrid* grid;
    const ParticleBatch* batch;
    void operator()(const InterfaceEvent& ev, Decision&) const {
        score_track_length(*grid, ev.element, 0, batch->weight[static_cast<std::size_t>(ev.particle)],
                           ev.segment_length);
    }
};

struct Setup {
    std::vector<double> start;
    std::vector<double> dest;
};

Setup make_flights(std::int64_t n, double edge, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, edge);
    Setup s;
    s.start.resize(static_cast<std::size_t>(3 * n));
    s.dest.resize(static_cast<std::size_t>(3 * n));
    for (std::int64_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) s.start[static_cast<std::size_t>(3 * i + k)] = u(gen);
        for (int k = 0; k < 3; ++k) s.dest[static_cast<std::size_t>(3 * i + k)] = u(gen);
    }
    return s;
}

template <class Trace>
double time_trace(const TetMesh& mesh, const Setup& s, std::int64_t n, TallyGrid& grid, Trace&& trace) {
    ParticleBatch batch = create_batch(n);
    initialize_locations(mesh, batch, s.start, n, 1);
    std::vector<std::int8_t> fly(static_cast<std::size_t>(n), 1);
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    load_step(batch, s.dest, fly, w, n);
    const auto t0 = std::chrono::steady_clock::now();
    trace(batch, Scorer{&grid, &batch});
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP adjacency walk benchmark"};
    int mesh_n = 20;
    std::int64_t particles = 200000;
    int threads = default_thread_count();
    std::uint64_t seed = 7;
    app.add_option("--mesh-n", mesh_n, "Cube subdivisions per axis")->check(CLI::PositiveNumber);
    app.add_option("--particles", particles, "Flights to trace")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Random seed");
    CLI11_PARSE(app, argc, argv);

    const TetMesh mesh = build_cube_mesh(mesh_n, 1.0);
    const Setup s = make_flights(particles, 1.0, seed);
    const auto ne = static_cast<std::int64_t>(mesh.num_elements());

    TallyGrid serial = create_grid(ne, 1);
    const double ts = time_trace(mesh, s, particles, serial,
                                 [&](ParticleBatch& b, Scorer cb) { trace_batch_serial(mesh, b, cb); });
    TallyGrid parallel = create_grid(ne, 1);
    const double tp = time_trace(mesh, s, particles, parallel,
                                 [&](ParticleBatch& b, Scorer cb) { trace_batch(mesh, b, cb, threads); });

    double worst = 0.0;
    for (std::size_t k = 0; k < serial.batch_accum.size(); ++k) {
        const double a = serial.batch_accum[k], b = parallel.batch_accum[k];
        const double scale = std::max(std::abs(a), std::abs(b));
        if (scale > 0) worst = std::max(worst, std::abs(a - b) / scale);
    }
    std::printf("elements %lld particles %lld threads %d\n", static_cast<long long>(ne),
                static_cast<long long>(particles), threads);
    std::printf("serial_s %.6f openmp_s %.6f speedup %.3f max_rel_diff %.3g\n", ts, tp, ts / tp, worst);
    return worst <= 1e-12 ? 0 : 1;
}
