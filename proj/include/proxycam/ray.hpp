#pragma once

#include <optional>
#include <vector>

#include "proxycam/geometry.hpp"

namespace proxycam {

/// Why a ray stopped being traced.
enum class KillReason {
    None,
    Vignetted,          ///< intersection beyond the clear semi-aperture
    TotalInternalReflection,
    NoConvergence,      ///< surface intersection did not converge
    Grazing,            ///< direction parallel to the vertex plane
};

const char* to_string(KillReason r);

/// A single ray in flight. Positions in mm, wavelength in micrometers,
/// accumulated optical path length in mm.
struct Ray {
    Vec3 origin;
    Vec3 direction{0, 0, 1}; ///< unit vector (k, l, m)
    double wavelength = 0.5876;
    double opl = 0.0;
    bool alive = true;
};

/// Everything recorded while tracing one ray to the sensor plane.
struct TraceRecord {
    std::vector<Vec3> surface_points;     ///< intersection per surface, in that surface's vertex frame
    Vec3 sensor_hit;                      ///< (x'', y'', 0) in the sensor frame; valid if alive
    Vec3 sensor_direction;                ///< unit direction at the sensor plane
    std::optional<Vec3> pupil_point;      ///< filled when the ray is carried back to the exit pupil
    double opl = 0.0;                     ///< OPL from the launch wavefront to the sensor, mm
    double wavelength = 0.5876;
    bool alive = false;
    std::optional<int> terminated_at;     ///< surface index where the ray died
    KillReason reason = KillReason::None;
};

} // namespace proxycam
