#pragma once

#include <cmath>

namespace proxycam {

/// Fraunhofer reference lines used by the two-point dispersion model, in micrometers.
inline constexpr double kLambdaF = 0.4861;
inline constexpr double kLambdaD = 0.5876;
inline constexpr double kLambdaC = 0.6563;

/// Optical medium described by its d-line index and Abbe number.
/// Index at other wavelengths follows n(lambda) = a + b / lambda^2, anchored
/// so that n(lambda_d) = nd and n_F - n_C = (nd - 1) / vd.
struct MaterialSpec {
    double nd = 1.0; ///< refractive index at the d line
    double vd = 0.0; ///< Abbe number; ignored for air (nd == 1)

    static constexpr MaterialSpec air() { return {1.0, 0.0}; }

    bool is_air() const { return nd == 1.0; }

    /// Refractive index at wavelength (micrometers).
    double index(double lambda_um) const {
        if (is_air()) return 1.0;
        const double inv2 = 1.0 / (lambda_um * lambda_um);
        const double invF2 = 1.0 / (kLambdaF * kLambdaF);
        const double invC2 = 1.0 / (kLambdaC * kLambdaC);
        const double invD2 = 1.0 / (kLambdaD * kLambdaD);
        const double b = (nd - 1.0) / (vd * (invF2 - invC2));
        const double a = nd - b * invD2;
        return a + b * inv2;
    }

    bool operator==(const MaterialSpec&) const = default;
};

} // namespace proxycam
