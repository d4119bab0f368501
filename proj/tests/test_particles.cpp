#include <doctest.h>

#include <vector>

#include "meshtally/errors.hpp"
#include "meshtally/particles.hpp"

using namespace meshtally;

TEST_CASE("create batch") {
    const ParticleBatch big = create_batch(100000);
    CHECK(big.capacity == 100000);
    CHECK(big.position.size() == 100000);
    CHECK(big.element.size() == 100000);
    CHECK(active_count(big) == 0);

    const ParticleBatch one = create_batch(1);
    CHECK(one.capacity == 1);
    CHECK(one.element[0] == kNoElement);

    CHECK_THROWS_AS(create_batch(0), ParameterError);
    CHECK_THROWS_AS(create_batch(-3), ParameterError);
}

TEST_CASE("load step") {
    ParticleBatch b = create_batch(3);
    for (std::size_t i = 0; i < 3; ++i) {
        b.alive[i] = 1;
        b.element[i] = 0;
        b.position[i] = {0.0, 0.0, 0.0};
    }
    b.alive[2] = 0;

    load_step(b, {}, {}, {}, 0);
    CHECK(active_count(b) == 0);

    const std::vector<double> dest{1, 0, 0, 0, 2, 0, 0, 0, 3};
    const std::vector<std::int8_t> fly{1, 0, 1};
    const std::vector<double> w{0.5, 1.0, 2.0};
    load_step(b, dest, fly, w, 3);
    CHECK(active_count(b) == 1);  // particle 2 is dead, particle 1 is not flying
    CHECK(b.flying[0] == 1);
    CHECK(b.flying[1] == 0);
    CHECK(b.flying[2] == 0);
    CHECK(b.destination[1].y == 2.0);
    CHECK(b.destination[2].z == 3.0);
    CHECK(b.weight[0] == 0.5);
    CHECK(b.weight[2] == 2.0);
    CHECK(b.direction[0].x == 1.0);
    CHECK(b.direction[1].y == 1.0);
    CHECK(b.entry_face[0] == -1);

    CHECK_THROWS_AS(load_step(b, dest, fly, w, 4), ParameterError);
    CHECK_THROWS_AS(load_step(b, std::vector<double>(6), fly, w, 3), ParameterError);
}

TEST_CASE("zero length step has a zero direction") {
    ParticleBatch b = create_batch(1);
    b.alive[0] = 1;
    b.element[0] = 0;
    b.position[0] = {0.3, 0.3, 0.3};
    const std::vector<double> dest{0.3, 0.3, 0.3};
    const std::vector<std::int8_t> fly{1};
    const std::vector<double> w{1.0};
    load_step(b, dest, fly, w, 1);
    CHECK(b.flying[0] == 1);
    CHECK(b.direction[0].x == 0.0);
    CHECK(b.direction[0].y == 0.0);
    CHECK(b.direction[0].z == 0.0);
}
