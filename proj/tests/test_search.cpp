#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "meshtally/errors.hpp"
#include "meshtally/search.hpp"
#include "meshtally/tally.hpp"
#include "oracle.hpp"

using namespace meshtally;

namespace {

struct Recorder {
    std::vector<std::vector<InterfaceEvent>>* events;
    void operator()(const InterfaceEvent& ev, Decision&) const {
        (*events)[static_cast<std::size_t>(ev.particle)].push_back(ev);
    }
};

ParticleBatch place(const TetMesh& mesh, const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    const auto n = static_cast<std::int64_t>(from.size());
    ParticleBatch b = create_batch(n);
    std::vector<double> start, dest;
    for (const Vec3& p : from) start.insert(start.end(), {p.x, p.y, p.z});
    for (const Vec3& p : to) dest.insert(dest.end(), {p.x, p.y, p.z});
    initialize_locations(mesh, b, start, n, 1);
    load_step(b, dest, std::vector<std::int8_t>(from.size(), 1), std::vector<double>(from.size(), 1.0), n);
    return b;
}

} // namespace

TEST_CASE("destination inside the starting element") {
    const TetMesh mesh = build_cube_mesh(2, 1.0);
    const Vec3 c = mesh.centroids[5];
    const Vec3 d = c + Vec3{1e-3, -1e-3, 2e-3};
    ParticleBatch b = place(mesh, {c}, {d});
    REQUIRE(b.element[0] == 5);
    std::vector<std::vector<InterfaceEvent>> ev(1);
    const TraceSummary s = trace_batch(mesh, b, Recorder{&ev}, 1);
    CHECK(s.sweeps == 1);
    REQUIRE(ev[0].size() == 1);
    CHECK(ev[0][0].exit_face == kExitDestination);
    CHECK(ev[0][0].segment_length == doctest::Approx(distance(c, d)).epsilon(1e-14));
    CHECK(b.flying[0] == 0);
    CHECK(b.alive[0] == 1);
    CHECK(b.element[0] == 5);
}

TEST_CASE("zero length step reaches immediately") {
    const TetMesh mesh = build_cube_mesh(2, 1.0);
    ParticleBatch b = place(mesh, {mesh.centroids[3]}, {mesh.centroids[3]});
    std::vector<std::vector<InterfaceEvent>> ev(1);
    trace_batch(mesh, b, Recorder{&ev}, 1);
    REQUIRE(ev[0].size() == 1);
    CHECK(ev[0][0].exit_face == kExitDestination);
    CHECK(ev[0][0].segment_length == 0.0);
    CHECK(b.flying[0] == 0);
}

TEST_CASE("straight ray path length telescopes") {
    const TetMesh mesh = build_cube_mesh(10, 1.0);
    ParticleBatch b = place(mesh, {{0.05, 0.05, 0.05}}, {{0.95, 0.05, 0.05}});
    TallyGrid grid = create_grid(static_cast<std::int64_t>(mesh.num_elements()), 1);
    std::vector<std::vector<InterfaceEvent>> ev(1);
    trace_batch(mesh, b, [&](const InterfaceEvent& e, Decision& d) {
        Recorder{&ev}(e, d);
        score_track_length(grid, e.element, 0, 1.0, e.segment_length);
    }, 1);
    double total = 0.0;
    for (const auto& e : ev[0]) total += e.segment_length;
    CHECK(std::abs(total - 0.9) <= 1e-12);
    CHECK(std::abs(batch_total(grid) - 0.9) <= 1e-12);
    CHECK(ev[0].back().exit_face == kExitDestination);
    // The ray runs along y = z = 0.05 and so cuts through the diagonal edge shared by the
    // six tets of every hexahedron; those crossings show up as zero-length recoveries.
    int recovered = 0;
    for (std::size_t k = 0; k + 1 < ev[0].size(); ++k) {
        if (ev[0][k].exit_face == kExitRecovered) {
            ++recovered;
            CHECK(ev[0][k].segment_length == 0.0);
            continue;
        }
        REQUIRE(ev[0][k].exit_face >= 0);
        CHECK(mesh.neighbor(ev[0][k].element, ev[0][k].exit_face).element == ev[0][k + 1].element);
    }
    CHECK(recovered > 0);
}

TEST_CASE("paths through vertices and out through boundary edges") {
    const TetMesh mesh = build_cube_mesh(4, 1.0);
    ParticleBatch b = place(mesh, {{0.5, 0.5, 0.5}, {0.25, 0.25, 0.25}}, {{2.0, 0.5, 0.5}, {1.25, 1.25, 1.25}});
    std::vector<std::vector<InterfaceEvent>> ev(2);
    const TraceSummary s = trace_batch(mesh, b, Recorder{&ev}, 1);
    CHECK(s.force_terminated == 0);
    CHECK(s.boundary_exits == 2);
    double along_x = 0.0, diagonal = 0.0;
    for (const auto& e : ev[0]) along_x += e.segment_length;
    for (const auto& e : ev[1]) diagonal += e.segment_length;
    CHECK(along_x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(diagonal == doctest::Approx(0.75 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("walk matches the sampling oracle") {
    const TetMesh mesh = build_cube_mesh(4, 1.0);
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec3> from, to;
    for (int i = 0; i < 1000; ++i) {
        from.push_back({u(gen), u(gen), u(gen)});
        to.push_back({u(gen), u(gen), u(gen)});
    }
    ParticleBatch b = place(mesh, from, to);
    std::vector<std::vector<InterfaceEvent>> ev(from.size());
    trace_batch(mesh, b, Recorder{&ev}, 0);
    for (std::size_t i = 0; i < from.size(); ++i) {
        std::vector<oracle::Piece> walked;
        for (const auto& e : ev[i]) walked.push_back({e.element, e.segment_length});
        const auto got = oracle::normalize(walked, 1e-8);
        const auto want = oracle::normalize(oracle::trace(mesh, from[i], to[i]), 1e-8);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].element == want[k].element);
            CHECK(std::abs(got[k].length - want[k].length) < 1e-6);
        }
    }
}

TEST_CASE("boundary exit kills the particle") {
    const TetMesh mesh = build_cube_mesh(3, 1.0);
    ParticleBatch b = place(mesh, {{0.5, 0.5, 0.5}}, {{2.0, 0.5, 0.5}});
    std::vector<std::vector<InterfaceEvent>> ev(1);
    const TraceSummary s = trace_batch(mesh, b, Recorder{&ev}, 1);
    CHECK(s.boundary_exits == 1);
    CHECK(ev[0].back().exit_face == kExitBoundary);
    CHECK(ev[0].back().segment_end.x == doctest::Approx(1.0));
    double total = 0.0;
    for (const auto& e : ev[0]) total += e.segment_length;
    CHECK(total == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.alive[0] == 0);
    CHECK(b.flying[0] == 0);
}

TEST_CASE("callback can stop or redirect a particle") {
    const TetMesh mesh = build_cube_mesh(4, 1.0);
    ParticleBatch b = place(mesh, {{0.05, 0.5, 0.5}}, {{0.95, 0.5, 0.5}});
    int calls = 0;
    trace_batch(mesh, b, [&](const InterfaceEvent&, Decision& d) {
        if (++calls == 2) d.particle_done = true;
    }, 1);
    CHECK(calls == 2);
    CHECK(b.flying[0] == 0);
    CHECK(b.alive[0] == 1);
    CHECK(b.position[0].x < 0.95);

    // Resurrect at the boundary: the callback sends the particle back into element 0.
    ParticleBatch c = place(mesh, {{0.5, 0.5, 0.5}}, {{2.0, 0.5, 0.5}});
    bool redirected = false;
    trace_batch(mesh, c, [&](const InterfaceEvent& ev, Decision& d) {
        if (ev.exit_face == kExitBoundary && !redirected) {
            redirected = true;
            d.particle_done = true;
            d.next_element = ev.element;
        }
    }, 1);
    CHECK(redirected);
    CHECK(c.alive[0] == 0);
}

TEST_CASE("serial and parallel sweeps agree") {
    const TetMesh mesh = build_cube_mesh(6, 1.0);
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    std::vector<Vec3> from, to;
    std::uniform_real_distribution<double> inside(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        from.push_back({inside(gen), inside(gen), inside(gen)});
        to.push_back({u(gen), u(gen), u(gen)});
    }
    const auto ne = static_cast<std::int64_t>(mesh.num_elements());
    auto run = [&](auto&& trace) {
        ParticleBatch b = place(mesh, from, to);
        TallyGrid g = create_grid(ne, 1);
        const TraceSummary s = trace(b, [&](const InterfaceEvent& e, Decision&) {
            score_track_length(g, e.element, 0, 1.0, e.segment_length);
        });
        return std::make_tuple(std::move(b), std::move(g), s);
    };
    auto [bs, gs, ss] = run([&](ParticleBatch& b, auto cb) { return trace_batch_serial(mesh, b, cb); });
    auto [bp, gp, sp] = run([&](ParticleBatch& b, auto cb) { return trace_batch(mesh, b, cb, 4); });
    CHECK(ss.events == sp.events);
    CHECK(ss.sweeps == sp.sweeps);
    CHECK(ss.boundary_exits == sp.boundary_exits);
    for (std::size_t i = 0; i < from.size(); ++i) {
        CHECK(bs.element[i] == bp.element[i]);
        CHECK(bs.alive[i] == bp.alive[i]);
        CHECK(bs.position[i].x == bp.position[i].x);
    }
    for (std::size_t k = 0; k < gs.batch_accum.size(); ++k)
        CHECK(std::abs(gs.batch_accum[k] - gp.batch_accum[k]) <= 1e-12 * std::abs(gs.batch_accum[k]));
}

TEST_CASE("flying without a location is an error") {
    const TetMesh mesh = build_cube_mesh(2, 1.0);
    ParticleBatch b = create_batch(1);
    b.flying[0] = 1;
    CHECK_THROWS_AS(trace_batch(mesh, b, NoOpCallback{}, 1), StateError);
    CHECK_THROWS_AS(trace_batch_serial(mesh, b, NoOpCallback{}), StateError);
}

TEST_CASE("initial localization") {
    const TetMesh mesh = build_cube_mesh(10, 1.0);
    SUBCASE("centroids") {
        for (ElementId k : {0, 17, 999, 5999}) {
            ParticleBatch b = create_batch(1);
            const Vec3 c = mesh.centroids[static_cast<std::size_t>(k)];
            initialize_locations(mesh, b, std::vector<double>{c.x, c.y, c.z}, 1, 1);
            CHECK(b.element[0] == k);
            CHECK(b.alive[0] == 1);
        }
    }
    SUBCASE("shared faces go to the lower element") {
        for (ElementId e : {0, 40, 3001}) {
            for (int f = 0; f < 4; ++f) {
                const FaceNeighbor nb = mesh.neighbor(e, f);
                if (nb.is_boundary()) continue;
                const auto c = mesh.corners(e);
                Vec3 mid{0, 0, 0};
                for (int v : kFaceVertices[f]) mid += c[static_cast<std::size_t>(v)] * (1.0 / 3.0);
                ParticleBatch b = create_batch(1);
                initialize_locations(mesh, b, std::vector<double>{mid.x, mid.y, mid.z}, 1, 1);
                CHECK(b.element[0] == std::min(e, nb.element));
            }
        }
    }
    SUBCASE("outside the mesh") {
        ParticleBatch b = create_batch(2);
        initialize_locations(mesh, b, std::vector<double>{1.5, 0.5, 0.5, 0.5, 0.5, 0.5}, 2, 1);
        CHECK(b.element[0] == kNoElement);
        CHECK(b.alive[0] == 0);
        CHECK(b.alive[1] == 1);
    }
    SUBCASE("random points agree with an exhaustive scan") {
        std::mt19937_64 gen(29);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::int64_t n = 10000;
        std::vector<double> pos;
        for (std::int64_t i = 0; i < 3 * n; ++i) pos.push_back(u(gen));
        ParticleBatch b = create_batch(n);
        initialize_locations(mesh, b, pos, n, 0);
        for (std::int64_t i = 0; i < n; ++i) {
            const Vec3 p{pos[static_cast<std::size_t>(3 * i)], pos[static_cast<std::size_t>(3 * i + 1)],
                         pos[static_cast<std::size_t>(3 * i + 2)]};
            REQUIRE(b.element[static_cast<std::size_t>(i)] == oracle::locate(mesh, p, 1e-9));
        }
    }
}
