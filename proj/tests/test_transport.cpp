#include <doctest.h>

#include <cmath>
#include <numbers>

#include "meshtally/errors.hpp"
#include "meshtally/tally.hpp"
#include "meshtally/transport.hpp"

using namespace meshtally;

namespace {

RunConfig small_config() {
    RunConfig c;
    c.mesh_n = 4;
    c.num_particles = 500;
    c.num_batches = 2;
    c.cross_sections = CrossSections::single_group(10.0, 5.0);
    return c;
}

} // namespace

TEST_CASE("source sampling") {
    RunConfig c;
    c.source = {{0.3, 0.2, 0.1}, {0.3, 0.2, 0.1}};
    for (std::uint32_t i = 0; i < 100; ++i) {
        RngStream rng(1, 0, i);
        const SourceSample s = sample_source(rng, c);
        CHECK(s.position.x == 0.3);
        CHECK(s.position.y == 0.2);
        CHECK(s.position.z == 0.1);
        CHECK(norm(s.direction) == doctest::Approx(1.0));
        CHECK(s.weight == 1.0);
        CHECK(s.group == 0);
    }

    c.source = {{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}};
    const int n = 1000000;
    Vec3 pos_sum{}, dir_sum{};
    for (int i = 0; i < n; ++i) {
        RngStream rng(2, 0, static_cast<std::uint32_t>(i));
        const SourceSample s = sample_source(rng, c);
        pos_sum += s.position;
        dir_sum += s.direction;
    }
    const double sigma = 0.5 / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < 3; ++k) CHECK(std::abs(pos_sum[k] / n - 0.25) < 4.0 * sigma);
    CHECK(norm(dir_sum * (1.0 / n)) < 4.0 / std::sqrt(static_cast<double>(n)));

    c.source_direction = Vec3{2.0, 0.0, 0.0};
    RngStream rng(3, 0, 0);
    const SourceSample s = sample_source(rng, c);
    CHECK(s.direction.x == 1.0);
    CHECK(rng.draws() == 5);
}

TEST_CASE("collision distance") {
    CHECK(collision_distance(std::exp(-1.0), 100.0) == doctest::Approx(0.01));
    CHECK(collision_distance(1.0, 100.0) == 0.0);
    CHECK_THROWS_AS(collision_distance(0.5, 0.0), ParameterError);

    RngStream rng(5, 0, 0);
    const int n = 1000000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double l = sample_collision_distance(rng, 100.0);
        REQUIRE(std::isfinite(l));
        s += l;
    }
    // Exponential with mean 0.01 has standard deviation 0.01.
    CHECK(std::abs(s / n - 0.01) < 4.0 * 0.01 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("collision outcomes") {
    const auto pure = CrossSections::single_group(100.0, 100.0);
    const auto absorber = CrossSections::single_group(100.0, 0.0);
    const auto half = CrossSections::single_group(1.0, 0.5);
    int scatters = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        RngStream r1(9, 0, static_cast<std::uint32_t>(i));
        const CollisionOutcome a = sample_collision(r1, pure, 0);
        REQUIRE_FALSE(a.absorbed);
        REQUIRE(r1.draws() == 4);
        RngStream r2(9, 1, static_cast<std::uint32_t>(i));
        REQUIRE(sample_collision(r2, absorber, 0).absorbed);
        RngStream r3(9, 2, static_cast<std::uint32_t>(i));
        scatters += sample_collision(r3, half, 0).absorbed ? 0 : 1;
    }
    CHECK(std::abs(scatters / static_cast<double>(n) - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("multigroup scattering follows the matrix row") {
    CrossSections xs{3, {2.0, 2.0, 2.0}, {0.0, 1.0, 1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0}};
    xs.check();
    int to1 = 0, to2 = 0, absorbed = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        RngStream r(4, 0, static_cast<std::uint32_t>(i));
        const CollisionOutcome c = sample_collision(r, xs, 0);
        if (c.absorbed) {
            ++absorbed;
            continue;
        }
        REQUIRE(c.group != 0);
        (c.group == 1 ? to1 : to2)++;
    }
    CHECK(absorbed == 0);
    CHECK(std::abs(to1 / static_cast<double>(n) - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
    for (int i = 0; i < 1000; ++i) {
        RngStream r(4, 1, static_cast<std::uint32_t>(i));
        const CollisionOutcome c = sample_collision(r, xs, 1);
        REQUIRE_FALSE(c.absorbed);
        CHECK(c.group == 1);
        RngStream r2(4, 2, static_cast<std::uint32_t>(i));
        CHECK(sample_collision(r2, xs, 2).absorbed);
    }
}

TEST_CASE("configuration checks") {
    CHECK_NOTHROW(RunConfig{}.check());
    RunConfig c;
    c.num_particles = 0;
    CHECK_THROWS_AS(c.check(), ParameterError);
    c = RunConfig{};
    c.source = {{0.6, 0.0, 0.0}, {0.5, 0.5, 0.5}};
    CHECK_THROWS_AS(c.check(), ParameterError);
    c = RunConfig{};
    c.source = {{0.0, 0.0, 0.0}, {1.5, 0.5, 0.5}};
    CHECK_THROWS_AS(c.check(), ParameterError);
    CHECK_THROWS_AS(CrossSections::single_group(1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(CrossSections::single_group(0.0, 0.0), ParameterError);
    CHECK_THROWS_AS((CrossSections{2, {1.0, 1.0}, {0.5}}.check()), ParameterError);
    c = RunConfig{};
    c.source_direction = Vec3{0, 0, 0};
    CHECK_THROWS_AS(c.check(), ParameterError);
}

TEST_CASE("a particle aimed at a wall leaks with the wall distance tallied") {
    RunConfig c;
    c.mesh_n = 3;
    c.num_particles = 1;
    c.num_batches = 1;
    c.cross_sections = CrossSections::single_group(1e-9, 0.0);
    c.source = {{0.2, 0.4, 0.6}, {0.2, 0.4, 0.6}};
    c.source_direction = Vec3{1.0, 0.0, 0.0};
    const RunResult r = run(c);
    CHECK(r.summary.flights == 1);
    CHECK(r.summary.collisions == 0);
    CHECK(r.summary.leaked_weight == 1.0);
    CHECK(r.summary.track_length == doctest::Approx(0.8).epsilon(1e-12));

    const RunResult again = run(c);
    CHECK(again.track_length.mean == r.track_length.mean);
}

TEST_CASE("a flight that ends inside collides there") {
    RunConfig c;
    c.mesh_n = 3;
    c.num_particles = 1;
    c.num_batches = 1;
    c.cross_sections = CrossSections::single_group(1e3, 0.0);
    c.source = {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    const RunResult r = run(c);
    CHECK(r.summary.collisions == 1);
    CHECK(r.summary.absorbed_weight == 1.0);
    CHECK(r.summary.leaked_weight == 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < r.mesh.num_elements(); ++e) total += r.collision.mean[e] * r.mesh.volumes[e];
    CHECK(total == doctest::Approx(1e-3));
}

TEST_CASE("weight balance") {
    RunConfig c = small_config();
    c.cross_sections = CrossSections::single_group(10.0, 10.0);
    const RunResult pure = run(c);
    CHECK(pure.summary.source_weight == 1000.0);
    CHECK(pure.summary.leaked_weight == pure.summary.source_weight);
    CHECK(pure.summary.absorbed_weight == 0.0);

    c.cross_sections = CrossSections::single_group(10.0, 5.0);
    const RunResult half = run(c);
    CHECK(half.summary.leaked_weight + half.summary.absorbed_weight == half.summary.source_weight);
    CHECK(half.summary.absorbed_weight > 0.0);
}

TEST_CASE("grid totals equal the total path length") {
    Simulation sim(small_config());
    sim.run_batch();
    const TallyGrid& g = sim.track_grid();
    double total = 0.0;
    for (double v : g.sum) total += v;
    // One batch normalized by 500 source particles.
    CHECK(total * 500.0 == doctest::Approx(sim.summary().track_length).epsilon(1e-12));
}

TEST_CASE("runs are reproducible and thread independent") {
    RunConfig c = small_config();
    const RunResult a = run(c);
    const RunResult b = run(c);
    CHECK(a.track_length.mean == b.track_length.mean);
    CHECK(a.collision.mean == b.collision.mean);
    c.threads = 3;
    const RunResult t = run(c);
    REQUIRE(t.track_length.mean.size() == a.track_length.mean.size());
    for (std::size_t k = 0; k < a.track_length.mean.size(); ++k) {
        const double x = a.track_length.mean[k], y = t.track_length.mean[k];
        CHECK(std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)));
    }
    c.threads = 1;
    c.seed = 43;
    CHECK(run(c).track_length.mean != a.track_length.mean);
}

TEST_CASE("backends agree") {
    RunConfig c = small_config();
    c.cross_sections = CrossSections::single_group(20.0, 18.0);
    const RunResult adj = run(c);
    c.backend = Backend::Baseline;
    const RunResult base = run(c);
    CHECK(adj.summary.segments == base.summary.segments);
    CHECK(adj.summary.flights == base.summary.flights);
    CHECK(adj.summary.leaked_weight == base.summary.leaked_weight);
    for (std::size_t k = 0; k < adj.track_length.mean.size(); ++k) {
        const double x = adj.track_length.mean[k], y = base.track_length.mean[k];
        CHECK(std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)));
    }
    CHECK(adj.collision.mean == base.collision.mean);
}

TEST_CASE("multigroup run") {
    RunConfig c = small_config();
    c.cross_sections = CrossSections{2, {10.0, 20.0}, {4.0, 4.0, 0.0, 10.0}};
    const RunResult r = run(c);
    CHECK(r.track_length.num_groups == 2);
    double g1 = 0.0;
    for (std::size_t e = 0; e < r.mesh.num_elements(); ++e) g1 += r.track_length.at(static_cast<ElementId>(e), 1);
    CHECK(g1 > 0.0);
    CHECK(r.summary.leaked_weight + r.summary.absorbed_weight == r.summary.source_weight);
}

TEST_CASE("finishing without batches is an error") {
    Simulation sim(small_config());
    CHECK_THROWS_AS(std::move(sim).finish(), StateError);
}
