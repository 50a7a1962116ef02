#pragma once

#include <vector>

#include "proxycam/sensor.hpp"
#include "proxycam/surface.hpp"

namespace proxycam {

/// Paraxial pupil and focus data derived from the nominal curvatures and
/// thicknesses (tilts and decenters do not enter the paraxial model).
struct ParaxialData {
    double efl = 0.0;                ///< effective focal length, mm
    double back_focal_distance = 0.0;///< last vertex to paraxial focus, mm
    double entrance_pupil_z = 0.0;   ///< relative to the first vertex, mm
    double entrance_pupil_radius = 0.0;
    double exit_pupil_z = 0.0;       ///< relative to the sensor plane (negative = in front), mm
    double exit_pupil_radius = 0.0;
};

/// An ordered sequence of surfaces plus the sensor behind them.
/// The global frame is the vertex frame of the first surface; vertex frames
/// of successive surfaces are related by pure translations along the
/// per-surface thickness vectors.
struct LensSystem {
    std::vector<Surface> surfaces;
    int stop_index = 0;
    SensorModel sensor;

    void validate() const;

    /// Paraxial solve at the given wavelength for pupils and focus.
    ParaxialData paraxial(double lambda_um) const;

    /// Refractive index of the medium in front of surface `i` at `lambda_um`.
    double index_before(int i, double lambda_um) const;
};

} // namespace proxycam
