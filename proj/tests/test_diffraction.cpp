#include <doctest.h>

#include <cmath>
#include <numbers>

#include "proxycam/diffraction.hpp"
#include "proxycam/rng.hpp"
#include "proxycam/trace.hpp"

using namespace proxycam;

namespace {

// Mean Huygens integrand over the pupil disc by dense radial quadrature:
// at the focus every wavelet arrives in phase, so the field amplitude is the
// plain integral of K / (l r).
double analytic_focus_mean(double radius, double distance) {
    const int n = 20000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double rho = radius * i / n;
        const double dist = std::sqrt(rho * rho + distance * distance);
        const double cos_t = distance / dist;
        const double k_factor = 0.5 * (cos_t + cos_t); // r toward focus, d reversed
        const double l = 2.0 * (distance + radius) - dist;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * k_factor / (l * dist) * rho;
    }
    const double integral = acc * (radius / n) * 2.0 * std::numbers::pi;
    return integral / (std::numbers::pi * radius * radius);
}

LensSystem make_singlet() {
    LensSystem sys;
    Surface front;
    front.curvature = 0.02;
    front.semi_aperture = 5.0;
    front.material = MaterialSpec{1.5, 50.0};
    Surface back;
    back.semi_aperture = 5.0;
    back.thickness = 100.0;
    sys.surfaces = {front, back};
    sys.stop_index = 0;
    sys.sensor.wavelengths_um = {kLambdaD};
    sys.sensor.channels = {{"mono", {1.0}}};
    return sys;
}

} // namespace

TEST_CASE("obliquity factor: printed special cases and cosine bounds") {
    const Vec3 n{0, 0, 1};
    CHECK(obliquity_factor({0, 0, -1}, {0, 0, 1}, n) == doctest::Approx(1.0));
    CHECK(obliquity_factor({1, 0, 0}, {0, 1, 0}, n) == doctest::Approx(0.0));

    SplitMix64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 d{rng.next_in(-1, 1), rng.next_in(-1, 1), rng.next_in(-1, 1)};
        const Vec3 r{rng.next_in(-1, 1), rng.next_in(-1, 1), rng.next_in(-1, 1)};
        if (d.norm() < 1e-6 || r.norm() < 1e-6) continue;
        const double k = obliquity_factor(d.normalized(), r, n);
        REQUIRE(k >= -1.0 - 1e-12);
        REQUIRE(k <= 1.0 + 1e-12);
    }
}

TEST_CASE("huygens: unaberrated f/2 pupil produces the Airy pattern") {
    const double radius = 5.0, distance = 20.0, lambda = 0.55;
    const PupilField field = ideal_pupil_field(radius, distance, lambda, 64);

    PsfWindow window;
    window.samples = 81;
    window.pitch_um = 0.05;
    const PsfGrid psf = huygens_psf(field, window);

    // Unit sum and non-negative entries.
    double total = 0.0;
    for (double v : psf.intensity) {
        REQUIRE(v >= 0.0);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // First zero along the center row at 1.22 lambda N, N = 2.
    const int c = window.samples / 2;
    int min_idx = -1;
    for (int j = c + 1; j + 1 < window.samples; ++j) {
        const double prev = psf.at(c, j - 1), cur = psf.at(c, j), next = psf.at(c, j + 1);
        if (cur < prev && cur <= next) {
            min_idx = j;
            break;
        }
    }
    REQUIRE(min_idx > 0);
    // Parabolic refinement around the minimum.
    const double y0 = psf.at(c, min_idx - 1), y1 = psf.at(c, min_idx), y2 = psf.at(c, min_idx + 1);
    const double shift = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2);
    const double zero_um = (min_idx - c + shift) * window.pitch_um;
    const double expected = 1.22 * lambda * distance / (2.0 * radius);
    CHECK(std::abs(zero_um - expected) / expected < 0.02);

    // Strehl against the dense-quadrature mean of the same integrand.
    const double peak_amp_mean = std::sqrt(psf.at(c, c) * psf.raw_total) / double(field.size());
    const double strehl = std::pow(peak_amp_mean / analytic_focus_mean(radius, distance), 2.0);
    CHECK(strehl >= 0.99);
    CHECK(strehl <= 1.01);
}

TEST_CASE("huygens: a single wavelet gives a smooth fringe-free falloff") {
    PupilField field;
    field.wavelength_um = 0.55;
    field.plane_z = -20.0;
    field.points = {{0.0, 0.0, -20.0}};
    field.path_lengths = {40.0};
    field.directions = {Vec3{0, 0, -1}};

    PsfWindow window;
    window.samples = 41;
    window.pitch_um = 2.0;
    const PsfGrid psf = huygens_psf(field, window);
    const int c = window.samples / 2;
    for (int j = c + 1; j + 1 < window.samples; ++j)
        REQUIRE(psf.at(c, j + 1) <= psf.at(c, j) + 1e-15);
}

TEST_CASE("huygens: amplitude scaling drops out of the normalized PSF") {
    PupilField field = ideal_pupil_field(2.0, 10.0, 0.55, 16);
    PsfWindow window;
    window.samples = 33;
    window.pitch_um = 0.2;
    const PsfGrid a = huygens_psf(field, window);
    field.amplitude = 2.0;
    const PsfGrid b = huygens_psf(field, window);
    for (size_t i = 0; i < a.intensity.size(); ++i)
        REQUIRE(a.intensity[i] == doctest::Approx(b.intensity[i]).epsilon(1e-12));
}

TEST_CASE("huygens: joint translation of pupil and window leaves the PSF unchanged") {
    PupilField field = ideal_pupil_field(2.0, 10.0, 0.55, 16);
    PsfWindow window;
    window.samples = 33;
    window.pitch_um = 0.2;
    const PsfGrid a = huygens_psf(field, window);

    const double dx = 0.37, dy = -0.21;
    PupilField shifted = field;
    for (auto& p : shifted.points) {
        p.x += dx;
        p.y += dy;
    }
    PsfWindow moved = window;
    moved.center_x_mm = dx;
    moved.center_y_mm = dy;
    const PsfGrid b = huygens_psf(shifted, moved);
    for (size_t i = 0; i < a.intensity.size(); ++i)
        REQUIRE(std::abs(a.intensity[i] - b.intensity[i]) < 1e-9);
}

TEST_CASE("huygens: undersized window is rejected") {
    const LensSystem sys = make_singlet();
    BundleResult bundle = trace_bundle(sys, FieldSpec::from_angles(0.05, 0), {16}, kLambdaD);
    PupilField pupil = pupil_from_trace(bundle.records, sys, kLambdaD);
    PsfWindow tiny;
    tiny.samples = 4;
    tiny.pitch_um = 0.05;
    tiny.center_x_mm = 0.0; // far from the off-axis spot
    CHECK_THROWS_AS(huygens_psf(pupil, tiny, &bundle.records), DiffractionError);
}

TEST_CASE("pupil field: single axial ray lands at the pupil center") {
    const LensSystem sys = make_singlet();
    Ray ray;
    ray.origin = {0, 0, -10};
    ray.direction = {0, 0, 1};
    ray.wavelength = kLambdaD;
    std::vector<TraceRecord> records{trace_ray(sys, ray)};
    REQUIRE(records[0].alive);
    const double forward_opl = records[0].opl;

    const PupilField field = pupil_from_trace(records, sys, kLambdaD);
    REQUIRE(field.size() == 1);
    CHECK(std::abs(field.points[0].x) < 1e-12);
    CHECK(std::abs(field.points[0].y) < 1e-12);
    CHECK(field.points[0].z == doctest::Approx(field.plane_z));
    // Back-propagation subtracts the pupil-to-sensor stretch.
    CHECK(field.path_lengths[0] == doctest::Approx(forward_opl + field.plane_z));
    CHECK(records[0].pupil_point.has_value());
}

TEST_CASE("pupil field: symmetric bundle stays symmetric, dead rays are dropped") {
    const LensSystem sys = make_singlet();
    BundleResult bundle = trace_bundle(sys, FieldSpec::from_angles(0, 0), {24}, kLambdaD);
    const int alive = bundle.survived;
    PupilField field = pupil_from_trace(bundle.records, sys, kLambdaD);
    CHECK(int(field.size()) == alive);
    double cx = 0.0, cy = 0.0;
    for (const auto& p : field.points) {
        cx += p.x;
        cy += p.y;
    }
    CHECK(std::abs(cx / field.size()) < 1e-9);
    CHECK(std::abs(cy / field.size()) < 1e-9);
}

TEST_CASE("polychromatic: single wavelength and identical-grid invariances") {
    const PupilField field = ideal_pupil_field(2.0, 10.0, 0.55, 12);
    PsfWindow window;
    window.samples = 21;
    window.pitch_um = 0.3;
    const PsfGrid psf = huygens_psf(field, window);

    const PsfGrid one = polychromatic_psf({psf}, {0.55}, {1.0});
    for (size_t i = 0; i < psf.intensity.size(); ++i)
        REQUIRE(one.intensity[i] == doctest::Approx(psf.intensity[i]).epsilon(1e-12));

    const PsfGrid two = polychromatic_psf({psf, psf}, {0.5, 0.6}, {0.3, 0.7});
    for (size_t i = 0; i < psf.intensity.size(); ++i)
        REQUIRE(two.intensity[i] == doctest::Approx(psf.intensity[i]).epsilon(1e-12));
}

TEST_CASE("polychromatic: trapezoid nodes integrate a linear-in-wavelength stack exactly") {
    // I(lambda) linear in lambda per pixel: any trapezoid node set integrates
    // it exactly, so sparse nodes must match a dense quadrature.
    const int size = 9;
    auto stack_at = [&](double lambda) {
        PsfGrid g;
        g.rows = g.cols = size;
        g.pitch_um = 1.0;
        g.intensity.assign(size * size, 0.0);
        for (int i = 0; i < size * size; ++i)
            g.intensity[i] = 1.0 + 0.1 * i + (0.5 + 0.01 * i) * lambda;
        g.raw_total = 1.0;
        return g;
    };
    const double lo = 0.48, hi = 0.65;

    std::vector<PsfGrid> sparse{stack_at(lo), stack_at(0.5 * (lo + hi)), stack_at(hi)};
    const PsfGrid a = polychromatic_psf(sparse, {lo, 0.5 * (lo + hi), hi}, {1.0, 1.0, 1.0});

    const int dense_n = 81;
    std::vector<PsfGrid> dense;
    std::vector<double> dense_l;
    std::vector<double> dense_w(dense_n, 1.0);
    for (int i = 0; i < dense_n; ++i) {
        const double l = lo + (hi - lo) * i / (dense_n - 1);
        dense.push_back(stack_at(l));
        dense_l.push_back(l);
    }
    const PsfGrid b = polychromatic_psf(dense, dense_l, dense_w);

    for (size_t i = 0; i < a.intensity.size(); ++i)
        REQUIRE(std::abs(a.intensity[i] - b.intensity[i]) < 1e-6);
}

TEST_CASE("polychromatic: mismatched grids are rejected") {
    const PupilField field = ideal_pupil_field(2.0, 10.0, 0.55, 12);
    PsfWindow window;
    window.samples = 21;
    window.pitch_um = 0.3;
    const PsfGrid psf = huygens_psf(field, window);
    PsfGrid other = psf;
    other.pitch_um *= 2.0;
    CHECK_THROWS_AS(polychromatic_psf({psf, other}, {0.5, 0.6}, {0.5, 0.5}), DiffractionError);
}

TEST_CASE("downsample: block sums preserve the unit total") {
    const PupilField field = ideal_pupil_field(2.0, 10.0, 0.55, 16);
    PsfWindow window;
    window.samples = 32;
    window.pitch_um = 0.25;
    const PsfGrid psf = huygens_psf(field, window);
    const PsfGrid down = downsample_psf(psf, 4);
    CHECK(down.rows == 8);
    CHECK(down.pitch_um == doctest::Approx(1.0));
    double total = 0.0;
    for (double v : down.intensity) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
