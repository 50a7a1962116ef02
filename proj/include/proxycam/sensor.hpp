#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace proxycam {

/// One spectral channel: non-negative weights over the sampled wavelength
/// list, normalized to sum 1.
struct SpectralChannel {
    std::string name;
    std::vector<double> response;
};

/// Photosensor description: geometry, spectral response and quantization.
struct SensorModel {
    double pixel_pitch_um = 2.0;
    int rows = 960;
    int cols = 1280;
    int bit_depth = 12;                  ///< 0 disables quantization
    std::vector<double> wavelengths_um{0.5876};
    std::vector<SpectralChannel> channels{{"mono", {1.0}}};

    double width_mm() const { return cols * pixel_pitch_um * 1e-3; }
    double height_mm() const { return rows * pixel_pitch_um * 1e-3; }

    void validate() const;
};

/// Additive sensor noise: Gaussian read noise plus a Gaussian approximation
/// of shot noise (variance proportional to the signal). Values are fractions
/// of full scale. Reproducible for a fixed seed.
struct NoiseModel {
    double read_sigma = 0.0;   ///< read noise std, full-scale fraction
    double shot_gain = 0.0;    ///< electrons per full-scale unit; 0 disables shot noise
    std::uint64_t seed = 0;

    bool enabled() const { return read_sigma > 0.0 || shot_gain > 0.0; }
};

} // namespace proxycam
