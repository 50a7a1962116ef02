#pragma once

#include <optional>
#include <vector>

#include "proxycam/lens_system.hpp"
#include "proxycam/ray.hpp"

namespace proxycam {

/// Newton iteration controls for the ray-surface intersection.
struct IntersectOptions {
    double step_tol = 1e-10;   ///< stop when |s_i - s_{i-1}| falls below, mm
    int max_iterations = 64;
};

struct Intersection {
    Vec3 point;        ///< on the surface, local frame
    double distance;   ///< signed distance s along the ray
    Vec3 normal;       ///< unit surface normal, +z oriented
};

/// Ray-surface intersection in the surface's local frame, seeded at the
/// vertex tangent plane. Returns nullopt when the iteration does not
/// converge or leaves the profile's domain.
std::optional<Intersection> intersect_surface(const Ray& ray, const Surface& surface,
                                              const IntersectOptions& opt = {});

struct RefractResult {
    Vec3 direction;
    bool total_internal_reflection = false;
};

/// Refracted unit direction for incident direction `d`, surface normal `r`
/// (need not be unit length) and indices n -> n_out. Selects the root of the
/// transmission branch; flags total internal reflection.
RefractResult refract_direction(const Vec3& d, const Vec3& r, double n, double n_out);

/// Frame change into a surface-local system: rotation `rot` about an origin
/// shifted by `origin`. Position maps as R (p - origin), direction as R d.
Ray to_local(const Ray& ray, const Mat3& rot, const Vec3& origin);
/// Inverse of to_local.
Ray from_local(const Ray& ray, const Mat3& rot, const Vec3& origin);

/// Carry a ray from its current vertex frame to the next one along the
/// thickness vector (norm `length`, unit direction `dir`), accumulating
/// OPL with the index of the traversed medium. Kills the ray when its
/// direction is parallel to the vertex plane.
bool transfer_to_next_vertex(Ray& ray, double length, const Vec3& dir, double medium_index);

/// Field specification for a launched bundle: an infinite-conjugate
/// direction or a finite object point (first-vertex frame).
struct FieldSpec {
    enum class Kind { Infinite, Finite };
    Kind kind = Kind::Infinite;
    Vec3 direction{0, 0, 1}; ///< used when Infinite
    Vec3 point;              ///< used when Finite

    static FieldSpec from_angles(double theta_x_rad, double theta_y_rad);
    static FieldSpec at_point(const Vec3& p);
};

/// Square grid across the entrance pupil; points outside the pupil disc are
/// skipped.
struct PupilSampling {
    int samples_across = 64;
};

/// One ray through the whole system. The input ray lives in the first
/// surface's vertex frame.
TraceRecord trace_ray(const LensSystem& system, const Ray& ray,
                      const IntersectOptions& opt = {});

struct BundleResult {
    std::vector<TraceRecord> records; ///< one per launched ray, launch order
    int launched = 0;
    int survived = 0;
    double survival_fraction() const { return launched ? double(survived) / launched : 0.0; }
};

/// Trace a full bundle for one field and wavelength. Throws TraceError when
/// every ray dies.
BundleResult trace_bundle(const LensSystem& system, const FieldSpec& field,
                          const PupilSampling& pupil, double lambda_um,
                          const IntersectOptions& opt = {});

/// A system that traces the reverse path, sensor side to object side.
/// Surface geometry is unchanged; gaps and media are mirrored.
LensSystem reversed_system(const LensSystem& system);

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
