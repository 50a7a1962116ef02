#include <doctest.h>

#include <numbers>

#include "proxycam/geometry.hpp"
#include "proxycam/rng.hpp"

using namespace proxycam;

TEST_CASE("tilt matrix: zero angles give the identity") {
    CHECK(euler_tilt_matrix(0, 0, 0).is_identity());
}

TEST_CASE("tilt matrix: alpha = pi/2 matches the printed factor") {
    const Mat3 r = euler_tilt_matrix(std::numbers::pi / 2, 0, 0);
    const double expected[9] = {0, 0, -1, 0, 1, 0, 1, 0, 0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(r(i, j) == doctest::Approx(expected[3 * i + j]).epsilon(1e-15));
}

TEST_CASE("tilt matrix: orthonormal with unit determinant for random angles") {
    SplitMix64 rng(42);
    for (int trial = 0; trial < 10000; ++trial) {
        const double a = rng.next_in(-std::numbers::pi, std::numbers::pi);
        const double b = rng.next_in(-std::numbers::pi, std::numbers::pi);
        const double g = rng.next_in(-std::numbers::pi, std::numbers::pi);
        const Mat3 r = euler_tilt_matrix(a, b, g);
        const Mat3 rtr = r.transposed() * r;
        REQUIRE(rtr.is_identity(1e-12));
        REQUIRE(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
}
