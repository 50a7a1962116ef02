#include "proxycam/surface.hpp"

#include <cmath>
#include <string>

namespace proxycam {

double Surface::sag(double rho) const {
    const double rho2 = rho * rho;
    double z = 0.0;
    if (curvature != 0.0) {
        const double t = (1.0 + conic) * curvature * curvature * rho2;
        if (t >= 1.0)
            throw std::domain_error("surface sag undefined at rho=" + std::to_string(rho));
        z = curvature * rho2 / (1.0 + std::sqrt(1.0 - t));
    }
    double p = rho2;
    for (double a : aspheric) {
        z += a * p;
        p *= rho2;
    }
    return z;
}

double Surface::sag_slope(double rho) const {
    double dz = 0.0;
    if (curvature != 0.0) {
        const double t = (1.0 + conic) * curvature * curvature * rho * rho;
        if (t >= 1.0)
            throw std::domain_error("surface sag undefined at rho=" + std::to_string(rho));
        dz = curvature * rho / std::sqrt(1.0 - t);
    }
    // d/drho of sum A_j rho^(2j), j = 1..N
    double p = rho;
    int exponent = 2;
    for (double a : aspheric) {
        dz += a * exponent * p;
        p *= rho * rho;
        exponent += 2;
    }
    return dz;
}

void Surface::validate() const {
    if (semi_aperture <= 0.0) throw std::invalid_argument("semi_aperture must be positive");
    if (!sag_defined(semi_aperture))
        throw std::invalid_argument("surface profile undefined inside the clear aperture");
    const double len = thickness_dir.norm();
    if (std::abs(len - 1.0) > 1e-12)
        throw std::invalid_argument("thickness_dir must be a unit vector");
    if (!material.is_air()) {
        if (material.nd < 1.3 || material.nd > 2.2)
            throw std::invalid_argument("glass nd outside [1.3, 2.2]");
        if (material.vd <= 0.0) throw std::invalid_argument("glass vd must be positive");
    }
}

} // namespace proxycam
