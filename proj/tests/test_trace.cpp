#include <doctest.h>

#include <cmath>
#include <numbers>

#include "proxycam/rng.hpp"
#include "proxycam/trace.hpp"

using namespace proxycam;

namespace {

Surface plane_surface(double sa = 10.0) {
    Surface s;
    s.semi_aperture = sa;
    return s;
}

Surface sphere_surface(double c, double sa = 10.0) {
    Surface s;
    s.curvature = c;
    s.semi_aperture = sa;
    return s;
}

// Thin plano-convex singlet: R = 50 mm front, flat back, f = 100 mm.
LensSystem make_singlet() {
    LensSystem sys;
    Surface front = sphere_surface(0.02, 5.0);
    front.thickness = 0.0;
    front.material = MaterialSpec{1.5, 50.0};
    Surface back = plane_surface(5.0);
    back.thickness = 100.0;
    sys.surfaces = {front, back};
    sys.stop_index = 0;
    sys.sensor.wavelengths_um = {kLambdaD};
    sys.sensor.channels = {{"mono", {1.0}}};
    return sys;
}

} // namespace

TEST_CASE("sag: plane, spherical closed form, single power term") {
    CHECK(plane_surface().sag(3.0) == 0.0);

    // Spherical sag oracle: z = c rho^2 / (1 + sqrt(1 - c^2 rho^2)).
    Surface sph = sphere_surface(0.1);
    const double oracle = 0.1 / (1.0 + std::sqrt(1.0 - 0.01));
    CHECK(sph.sag(1.0) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(sph.sag(1.0) == doctest::Approx(0.0501256).epsilon(1e-5));

    Surface asph = plane_surface();
    asph.aspheric = {0.01};
    CHECK(asph.sag(2.0) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("sag: domain error outside the conic root") {
    Surface s = sphere_surface(0.5, 1.0);
    CHECK_THROWS_AS(s.sag(3.0), std::domain_error);
}

TEST_CASE("intersect: planar intercept") {
    Ray ray;
    ray.origin = {0, 0, -10};
    ray.direction = {0, 0, 1};
    const auto hit = intersect_surface(ray, plane_surface());
    REQUIRE(hit.has_value());
    CHECK(hit->point.x == doctest::Approx(0.0));
    CHECK(hit->point.z == doctest::Approx(0.0));
    CHECK(hit->distance == doctest::Approx(10.0));
}

TEST_CASE("intersect: sphere against the quadratic line-sphere oracle") {
    const double c = 0.1, radius = 1.0 / c;
    Ray ray;
    ray.origin = {1, 0, -10};
    ray.direction = {0, 0, 1};

    // Independent oracle: intersect the line with the full sphere centered at
    // (0, 0, R), keep the near root.
    const Vec3 center{0, 0, radius};
    const Vec3 oc = ray.origin - center;
    const double b = 2.0 * oc.dot(ray.direction);
    const double cc = oc.squared_norm() - radius * radius;
    const double disc = b * b - 4.0 * cc;
    REQUIRE(disc > 0.0);
    const double s_oracle = (-b - std::sqrt(disc)) / 2.0;

    const auto hit = intersect_surface(ray, sphere_surface(c));
    REQUIRE(hit.has_value());
    CHECK(hit->distance == doctest::Approx(s_oracle).epsilon(1e-12));
    CHECK(hit->point.z == doctest::Approx(0.0501256).epsilon(1e-5));
    CHECK(hit->distance == doctest::Approx(10.0501256).epsilon(1e-6));
}

TEST_CASE("intersect: zero distance fixed point on the vertex") {
    Ray ray;
    ray.origin = {0, 0, 0};
    ray.direction = {0, 0, 1};
    const auto hit = intersect_surface(ray, plane_surface());
    REQUIRE(hit.has_value());
    CHECK(hit->distance == 0.0);
}

TEST_CASE("intersect: residual |F| at the returned point stays below 1e-10") {
    Surface s = sphere_surface(0.05);
    s.conic = -0.6;
    s.aspheric = {1e-4, -2e-6};
    SplitMix64 rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        Ray ray;
        ray.origin = {rng.next_in(-4, 4), rng.next_in(-4, 4), -20.0};
        const Vec3 target{rng.next_in(-2, 2), rng.next_in(-2, 2), 0.0};
        ray.direction = (target - ray.origin).normalized();
        const auto hit = intersect_surface(ray, s);
        if (!hit) continue;
        const double rho = std::hypot(hit->point.x, hit->point.y);
        if (!s.sag_defined(rho)) continue;
        const double f = hit->point.z - s.sag(rho);
        REQUIRE(std::abs(f) <= 1e-10);
    }
}

TEST_CASE("refract: normal incidence and index-matched pass-through") {
    const Vec3 d{0, 0, 1};
    const Vec3 r{0, 0, 1};
    auto out = refract_direction(d, r, 1.0, 1.7);
    CHECK(!out.total_internal_reflection);
    CHECK(out.direction.z == doctest::Approx(1.0));

    const Vec3 skew = Vec3{0.3, -0.2, 0.9}.normalized();
    out = refract_direction(skew, Vec3{0.1, 0.2, 1.0}, 1.5, 1.5);
    CHECK(out.direction.x == doctest::Approx(skew.x).epsilon(1e-14));
    CHECK(out.direction.y == doctest::Approx(skew.y).epsilon(1e-14));
    CHECK(out.direction.z == doctest::Approx(skew.z).epsilon(1e-14));
}

TEST_CASE("refract: 45 degree scalar Snell oracle") {
    const double s2 = std::sqrt(2.0) / 2.0;
    const auto out = refract_direction({s2, 0, s2}, {0, 0, 1}, 1.0, 1.5);
    REQUIRE(!out.total_internal_reflection);
    // sin(theta') = sin(45)/1.5; direction stays in the xz plane.
    const double sin_out = s2 / 1.5;
    CHECK(out.direction.x == doctest::Approx(sin_out).epsilon(1e-12));
    CHECK(out.direction.x == doctest::Approx(0.471405).epsilon(1e-6));
    CHECK(out.direction.y == doctest::Approx(0.0));
    CHECK(out.direction.z == doctest::Approx(0.881917).epsilon(1e-6));
}

TEST_CASE("refract: total internal reflection flagged") {
    const double s = std::sin(80.0 * std::numbers::pi / 180.0);
    const double c = std::cos(80.0 * std::numbers::pi / 180.0);
    const auto out = refract_direction({s, 0, c}, {0, 0, 1}, 1.5, 1.0);
    CHECK(out.total_internal_reflection);
}

TEST_CASE("refract: scalar Snell and coplanarity over random cases") {
    SplitMix64 rng(99);
    int checked = 0;
    while (checked < 10000) {
        Vec3 d{rng.next_in(-1, 1), rng.next_in(-1, 1), rng.next_in(0.2, 1)};
        d = d.normalized();
        Vec3 r{rng.next_in(-0.5, 0.5), rng.next_in(-0.5, 0.5), 1.0};
        const double n1 = rng.next_in(1.0, 1.9);
        const double n2 = rng.next_in(1.0, 1.9);
        const auto out = refract_direction(d, r, n1, n2);
        if (out.total_internal_reflection) continue;
        ++checked;
        const Vec3 rn = r.normalized();
        const double sin_in = d.cross(rn).norm();
        const double sin_out = out.direction.cross(rn).norm();
        REQUIRE(std::abs(n1 * sin_in - n2 * sin_out) < 1e-9);
        REQUIRE(std::abs(d.dot(out.direction.cross(r))) < 1e-9);
        REQUIRE(out.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("frame change: identity, translation, and round trip") {
    Ray ray;
    ray.origin = {1, 2, 3};
    ray.direction = Vec3{0.1, -0.2, 0.97}.normalized();

    const Ray same = to_local(ray, Mat3::identity(), {0, 0, 0});
    CHECK(same.origin.x == ray.origin.x);

    const Ray shifted = to_local(ray, Mat3::identity(), {1, 0, 0});
    CHECK(shifted.origin.x == doctest::Approx(0.0));

    SplitMix64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat3 rot = euler_tilt_matrix(rng.next_in(-0.5, 0.5), rng.next_in(-0.5, 0.5),
                                           rng.next_in(-0.5, 0.5));
        const Vec3 origin{rng.next_in(-2, 2), rng.next_in(-2, 2), rng.next_in(-2, 2)};
        const Ray back = from_local(to_local(ray, rot, origin), rot, origin);
        REQUIRE((back.origin - ray.origin).norm() < 1e-12);
        REQUIRE((back.direction - ray.direction).norm() < 1e-12);
    }
}

TEST_CASE("transfer: axial step, decenter offset, OPL increment") {
    Ray ray;
    ray.origin = {0, 0, 0};
    ray.direction = {0, 0, 1};
    REQUIRE(transfer_to_next_vertex(ray, 5.0, {0, 0, 1}, 1.0));
    CHECK(ray.origin.z == 0.0);
    CHECK(ray.opl == doctest::Approx(5.0));

    Ray lateral;
    lateral.origin = {0, 0, 0};
    lateral.direction = {0, 0, 1};
    const Vec3 dir = Vec3{0.1, 0, 1}.normalized();
    REQUIRE(transfer_to_next_vertex(lateral, 5.0, dir, 1.0));
    CHECK(lateral.origin.x == doctest::Approx(-5.0 * dir.x));

    Ray opl_ray;
    opl_ray.origin = {0, 0, 0};
    opl_ray.direction = {0, 0, 1};
    REQUIRE(transfer_to_next_vertex(opl_ray, 2.0, {0, 0, 1}, 1.5));
    CHECK(opl_ray.opl == doctest::Approx(3.0));
}

TEST_CASE("trace: dummy plane system is a straight line to the sensor") {
    LensSystem sys;
    Surface dummy = plane_surface(50.0);
    dummy.thickness = 30.0;
    sys.surfaces = {dummy};
    sys.stop_index = 0;

    Ray ray;
    ray.origin = {1.0, -2.0, -10.0};
    ray.direction = Vec3{0.01, 0.02, 1.0}.normalized();
    const TraceRecord rec = trace_ray(sys, ray);
    REQUIRE(rec.alive);
    const double dz = 30.0 + 10.0;
    CHECK(rec.sensor_hit.x ==
          doctest::Approx(1.0 + ray.direction.x / ray.direction.z * dz).epsilon(1e-12));
    CHECK(rec.sensor_hit.y ==
          doctest::Approx(-2.0 + ray.direction.y / ray.direction.z * dz).epsilon(1e-12));
}

TEST_CASE("trace: thin singlet focuses a paraxial ray at f = 100 mm") {
    const LensSystem sys = make_singlet();
    const ParaxialData par = sys.paraxial(kLambdaD);
    CHECK(par.efl == doctest::Approx(100.0).epsilon(1e-9));

    Ray ray;
    ray.origin = {0.01, 0, -10};
    ray.direction = {0, 0, 1};
    ray.wavelength = kLambdaD;
    const TraceRecord rec = trace_ray(sys, ray);
    REQUIRE(rec.alive);
    // Axis crossing from the residual height and slope at the sensor.
    const double slope = rec.sensor_direction.x / rec.sensor_direction.z;
    const double crossing = 100.0 - rec.sensor_hit.x / slope;
    CHECK(std::abs(crossing - 100.0) / 100.0 < 1e-3);
}

TEST_CASE("trace: rays beyond the clear aperture are vignetted") {
    const LensSystem sys = make_singlet();
    Ray ray;
    ray.origin = {5.5, 0, -10};
    ray.direction = {0, 0, 1};
    const TraceRecord rec = trace_ray(sys, ray);
    CHECK(!rec.alive);
    REQUIRE(rec.terminated_at.has_value());
    CHECK(*rec.terminated_at == 0);
    CHECK(rec.reason == KillReason::Vignetted);
}

TEST_CASE("trace: meridional rays stay meridional in a symmetric system") {
    const LensSystem sys = make_singlet();
    SplitMix64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Ray ray;
        ray.origin = {0.0, rng.next_in(-4, 4), -10};
        ray.direction = Vec3{0.0, rng.next_in(-0.05, 0.05), 1.0}.normalized();
        ray.wavelength = kLambdaD;
        const TraceRecord rec = trace_ray(sys, ray);
        if (!rec.alive) continue;
        REQUIRE(std::abs(rec.sensor_hit.x) < 1e-12);
    }
}

TEST_CASE("trace: zero perturbation equals the nominal trace bit for bit") {
    LensSystem nominal = make_singlet();
    LensSystem perturbed = nominal;
    perturbed.surfaces[0].tilt_alpha = 0.0;
    perturbed.surfaces[0].decenter_x = 0.0;

    const FieldSpec field = FieldSpec::from_angles(0.01, -0.005);
    const BundleResult a = trace_bundle(nominal, field, {16}, kLambdaD);
    const BundleResult b = trace_bundle(perturbed, field, {16}, kLambdaD);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        if (!a.records[i].alive) continue;
        CHECK(a.records[i].sensor_hit.x == b.records[i].sensor_hit.x);
        CHECK(a.records[i].sensor_hit.y == b.records[i].sensor_hit.y);
        CHECK(a.records[i].opl == b.records[i].opl);
    }
}

TEST_CASE("trace: bundle spot centroid sits on the axis for the on-axis field") {
    const LensSystem sys = make_singlet();
    const BundleResult bundle = trace_bundle(sys, FieldSpec::from_angles(0, 0), {32}, kLambdaD);
    double cx = 0.0;
    int n = 0;
    for (const auto& rec : bundle.records) {
        if (!rec.alive) continue;
        cx += rec.sensor_hit.x;
        ++n;
    }
    REQUIRE(n > 0);
    CHECK(std::abs(cx / n) < 1e-9);
}

TEST_CASE("trace: reversing a surviving ray returns to the launch point") {
    LensSystem sys = make_singlet();
    // Break the symmetry so the test covers tilt + decenter handling.
    sys.surfaces[0].tilt_alpha = 0.002;
    sys.surfaces[0].tilt_beta = -0.001;
    sys.surfaces[0].decenter_x = 0.03;
    sys.surfaces[1].decenter_y = -0.02;

    const LensSystem rev = reversed_system(sys);

    SplitMix64 rng(23);
    int tested = 0;
    while (tested < 50) {
        Ray ray;
        ray.origin = {rng.next_in(-3, 3), rng.next_in(-3, 3), -10.0};
        ray.direction = Vec3{rng.next_in(-0.02, 0.02), rng.next_in(-0.02, 0.02), 1.0}.normalized();
        ray.wavelength = kLambdaD;
        const TraceRecord fwd = trace_ray(sys, ray);
        if (!fwd.alive) continue;
        ++tested;

        Ray back;
        back.wavelength = kLambdaD;
        // Shift the sensor-frame hit into the last surface's vertex frame.
        const Surface& last = sys.surfaces.back();
        back.origin = fwd.sensor_hit + last.thickness_dir * last.thickness;
        back.direction = -fwd.sensor_direction;
        const TraceRecord rec = trace_ray(rev, back);
        REQUIRE(rec.alive);

        // The reversed system's exit frame sits 1 mm behind the first vertex;
        // carry the ray to the original launch plane.
        const Vec3 exit_pos{rec.sensor_hit.x, rec.sensor_hit.y, -1.0};
        const Vec3 d = rec.sensor_direction;
        const double t = (-10.0 - exit_pos.z) / d.z;
        const Vec3 at_launch = exit_pos + d * t;
        REQUIRE(std::abs(at_launch.x - ray.origin.x) < 1e-6);
        REQUIRE(std::abs(at_launch.y - ray.origin.y) < 1e-6);
    }
}

TEST_CASE("trace: OPL is non-decreasing along a forward system") {
    const LensSystem sys = make_singlet();
    const BundleResult bundle = trace_bundle(sys, FieldSpec::from_angles(0.02, 0.0), {8}, kLambdaD);
    for (const auto& rec : bundle.records) {
        if (!rec.alive) continue;
        CHECK(rec.opl > 0.0);
    }
}
