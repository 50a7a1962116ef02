#pragma once

#include <stdexcept>
#include <vector>

#include "proxycam/geometry.hpp"
#include "proxycam/material.hpp"

namespace proxycam {

/// One refracting (or stop) surface of a sequential system, including its
/// full perturbation state: profile coefficients, tilt, decenter and the
/// thickness vector that carries the ray to the next vertex.
struct Surface {
    // Rotationally symmetric profile z = sag(rho).
    double curvature = 0.0;          ///< vertex curvature, 1/mm
    double conic = 0.0;              ///< conic constant
    std::vector<double> aspheric;    ///< even coefficients [A2, A4, ...]; A[j] multiplies rho^(2(j+1))
    double semi_aperture = 0.0;      ///< clear semi-diameter, mm

    // Placement perturbations (all zero for the nominal design).
    double tilt_alpha = 0.0;         ///< t_zx, radians
    double tilt_beta = 0.0;          ///< t_yz, radians
    double tilt_gamma = 0.0;         ///< t_xy, radians
    double decenter_x = 0.0;         ///< lateral offset of the surface frame, mm
    double decenter_y = 0.0;

    // Gap to the next vertex (or to the sensor plane for the last surface).
    double thickness = 0.0;          ///< vector norm, mm
    Vec3 thickness_dir{0, 0, 1};     ///< unit direction cosines

    MaterialSpec material;           ///< medium after this surface

    bool is_plane() const { return curvature == 0.0 && aspheric.empty(); }
    bool has_tilt() const { return tilt_alpha != 0 || tilt_beta != 0 || tilt_gamma != 0; }
    bool has_decenter() const { return decenter_x != 0 || decenter_y != 0; }

    /// Profile height z at radial distance rho from the local axis.
    /// Throws std::domain_error where the conic root is undefined.
    double sag(double rho) const;

    /// d(sag)/d(rho).
    double sag_slope(double rho) const;

    /// True if (1 + k) c^2 rho^2 < 1, i.e. the profile is defined at rho.
    bool sag_defined(double rho) const {
        const double t = (1.0 + conic) * curvature * curvature * rho * rho;
        return t < 1.0;
    }

    void validate() const;
};

} // namespace proxycam
