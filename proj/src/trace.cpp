#include "proxycam/trace.hpp"

#include <cmath>

namespace proxycam {

const char* to_string(KillReason r) {
    switch (r) {
        case KillReason::None: return "none";
        case KillReason::Vignetted: return "vignetted";
        case KillReason::TotalInternalReflection: return "tir";
        case KillReason::NoConvergence: return "no_convergence";
        case KillReason::Grazing: return "grazing";
    }
    return "unknown";
}

std::optional<Intersection> intersect_surface(const Ray& ray, const Surface& surface,
                                              const IntersectOptions& opt) {
    const Vec3& o = ray.origin;
    const Vec3& d = ray.direction;
    if (d.z == 0.0) return std::nullopt;

    // Seed at the vertex tangent plane z = 0.
    double s = -o.z / d.z;

    if (surface.is_plane()) {
        const Vec3 p = o + d * s;
        return Intersection{p, s, Vec3{0, 0, 1}};
    }

    double prev = s + 2.0 * opt.step_tol + 1.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Vec3 p = o + d * s;
        const double rho2 = p.x * p.x + p.y * p.y;
        const double rho = std::sqrt(rho2);
        if (!surface.sag_defined(rho)) return std::nullopt;

        const double f = p.z - surface.sag(rho);
        double fx = 0.0, fy = 0.0;
        if (rho > 0.0) {
            const double slope = surface.sag_slope(rho);
            fx = -slope * p.x / rho;
            fy = -slope * p.y / rho;
        }
        const double fprime = fx * d.x + fy * d.y + d.z;
        if (fprime == 0.0) return std::nullopt;

        prev = s;
        s = s - f / fprime;
        if (std::abs(s - prev) < opt.step_tol) {
            const Vec3 q = o + d * s;
            const double qrho = std::sqrt(q.x * q.x + q.y * q.y);
            if (!surface.sag_defined(qrho)) return std::nullopt;
            double qx = 0.0, qy = 0.0;
            if (qrho > 0.0) {
                const double slope = surface.sag_slope(qrho);
                qx = -slope * q.x / qrho;
                qy = -slope * q.y / qrho;
            }
            const Vec3 normal = Vec3{qx, qy, 1.0}.normalized();
            return Intersection{q, s, normal};
        }
    }
    return std::nullopt;
}

RefractResult refract_direction(const Vec3& d, const Vec3& r, double n, double n_out) {
    const double mu = n / n_out;
    const double r2 = r.squared_norm();
    const double dr = d.dot(r);
    const double a = mu * dr / r2;
    const double b = (mu * mu - 1.0) / r2;

    const double disc = a * a - b;
    if (disc < 0.0) return {d, true};

    // Transmission root: keeps the propagation sense across the surface.
    const double root = std::sqrt(disc);
    const double gamma = (dr >= 0.0) ? (-a + root) : (-a - root);

    Vec3 out = d * mu + r * gamma;
    return {out.normalized(), false};
}

Ray to_local(const Ray& ray, const Mat3& rot, const Vec3& origin) {
    Ray out = ray;
    out.origin = rot * (ray.origin - origin);
    out.direction = rot * ray.direction;
    return out;
}

Ray from_local(const Ray& ray, const Mat3& rot, const Vec3& origin) {
    Ray out = ray;
    const Mat3 rt = rot.transposed();
    out.origin = rt * ray.origin + origin;
    out.direction = rt * ray.direction;
    return out;
}

bool transfer_to_next_vertex(Ray& ray, double length, const Vec3& dir, double medium_index) {
    const double m = ray.direction.z;
    if (std::abs(m) < 1e-15) {
        ray.alive = false;
        return false;
    }
    const double s = (length * dir.z - ray.origin.z) / m;
    ray.origin.x = ray.origin.x + ray.direction.x * s - length * dir.x;
    ray.origin.y = ray.origin.y + ray.direction.y * s - length * dir.y;
    ray.origin.z = 0.0;
    ray.opl += medium_index * s;
    return true;
}

FieldSpec FieldSpec::from_angles(double theta_x_rad, double theta_y_rad) {
    FieldSpec f;
    f.kind = Kind::Infinite;
    const double tx = std::tan(theta_x_rad);
    const double ty = std::tan(theta_y_rad);
    f.direction = Vec3{tx, ty, 1.0}.normalized();
    return f;
}

FieldSpec FieldSpec::at_point(const Vec3& p) {
    FieldSpec f;
    f.kind = Kind::Finite;
    f.point = p;
    return f;
}

TraceRecord trace_ray(const LensSystem& system, const Ray& input, const IntersectOptions& opt) {
    TraceRecord rec;
    rec.wavelength = input.wavelength;
    rec.surface_points.reserve(system.surfaces.size());

    Ray ray = input;
    double n_in = 1.0;

    for (size_t i = 0; i < system.surfaces.size(); ++i) {
        const Surface& surf = system.surfaces[i];

        const bool framed = surf.has_tilt() || surf.has_decenter();
        const Mat3 rot = framed
                             ? euler_tilt_matrix(surf.tilt_alpha, surf.tilt_beta, surf.tilt_gamma)
                             : Mat3::identity();
        const Vec3 origin{surf.decenter_x, surf.decenter_y, 0.0};

        Ray local = framed ? to_local(ray, rot, origin) : ray;

        if (local.direction.z == 0.0) {
            rec.terminated_at = int(i);
            rec.reason = KillReason::Grazing;
            return rec;
        }

        auto hit = intersect_surface(local, surf, opt);
        if (!hit) {
            rec.terminated_at = int(i);
            rec.reason = KillReason::NoConvergence;
            return rec;
        }
        const double rho = std::hypot(hit->point.x, hit->point.y);
        if (rho > surf.semi_aperture) {
            rec.terminated_at = int(i);
            rec.reason = KillReason::Vignetted;
            return rec;
        }

        const double n_out = surf.material.index(ray.wavelength);
        local.origin = hit->point;
        local.opl += n_in * hit->distance;

        if (n_in != n_out) {
            const RefractResult refr = refract_direction(local.direction, hit->normal, n_in, n_out);
            if (refr.total_internal_reflection) {
                rec.terminated_at = int(i);
                rec.reason = KillReason::TotalInternalReflection;
                return rec;
            }
            local.direction = refr.direction;
        }

        ray = framed ? from_local(local, rot, origin) : local;
        rec.surface_points.push_back(ray.origin);

        if (!transfer_to_next_vertex(ray, surf.thickness, surf.thickness_dir, n_out)) {
            rec.terminated_at = int(i);
            rec.reason = KillReason::Grazing;
            return rec;
        }
        n_in = n_out;
    }

    rec.alive = true;
    rec.sensor_hit = ray.origin; // z == 0 by construction of the last transfer
    rec.sensor_direction = ray.direction;
    rec.opl = ray.opl;
    return rec;
}

BundleResult trace_bundle(const LensSystem& system, const FieldSpec& field,
                          const PupilSampling& pupil, double lambda_um,
                          const IntersectOptions& opt) {
    if (pupil.samples_across <= 0) throw TraceError("pupil sampling must be positive");

    const ParaxialData par = system.paraxial(lambda_um);
    const double ep_z = par.entrance_pupil_z;
    const double ep_r = par.entrance_pupil_radius;
    if (!(ep_r > 0.0) || !std::isfinite(ep_r)) throw TraceError("entrance pupil radius not usable");

    // Launch plane safely in front of the first vertex and the pupil.
    const double z_launch = std::min(0.0, ep_z) - std::max(10.0, 2.0 * ep_r);

    BundleResult out;
    const int n = pupil.samples_across;
    out.records.reserve(size_t(n) * n);

    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            // Cell-centered grid over the pupil disc (see ideal_pupil_field).
            const double u = (2.0 * ix + 1.0) / n - 1.0;
            const double v = (2.0 * iy + 1.0) / n - 1.0;
            if (u * u + v * v > 1.0) continue;
            const Vec3 pupil_point{u * ep_r, v * ep_r, ep_z};

            Ray ray;
            ray.wavelength = lambda_um;
            if (field.kind == FieldSpec::Kind::Infinite) {
                ray.direction = field.direction;
                const double t = (z_launch - ep_z) / ray.direction.z;
                ray.origin = pupil_point + ray.direction * t;
                // Plane-wavefront reference through (0, 0, z_launch).
                ray.opl = ray.direction.dot(ray.origin - Vec3{0, 0, z_launch});
            } else {
                ray.origin = field.point;
                ray.direction = (pupil_point - field.point).normalized();
                ray.opl = 0.0;
            }

            out.records.push_back(trace_ray(system, ray, opt));
            ++out.launched;
            if (out.records.back().alive) ++out.survived;
        }
    }

    if (out.launched == 0) throw TraceError("pupil grid produced no rays");
    if (out.survived == 0) throw TraceError("empty bundle: every ray was terminated");
    return out;
}

LensSystem reversed_system(const LensSystem& system) {
    LensSystem rev;
    rev.sensor = system.sensor;
    const int n = int(system.surfaces.size());
    rev.stop_index = n - 1 - system.stop_index;
    rev.surfaces.reserve(n);

    for (int j = 0; j < n; ++j) {
        const int i = n - 1 - j;
        Surface s = system.surfaces[i];
        // Medium after the reversed surface = medium in front of the forward one.
        s.material = (i == 0) ? MaterialSpec::air() : system.surfaces[i - 1].material;
        if (i == 0) {
            // Last reversed gap: out into object space; span chosen by the caller
            // via the returned system's sensor placement. Keep a unit gap.
            s.thickness = 1.0;
            s.thickness_dir = Vec3{0, 0, -1};
        } else {
            s.thickness = system.surfaces[i - 1].thickness;
            s.thickness_dir = -system.surfaces[i - 1].thickness_dir;
        }
        rev.surfaces.push_back(s);
    }
    return rev;
}

} // namespace proxycam
