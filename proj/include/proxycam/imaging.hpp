#pragma once

#include <cstdint>
#include <vector>

#include "proxycam/diffraction.hpp"
#include "proxycam/image.hpp"
#include "proxycam/rng.hpp"
#include "proxycam/sensor.hpp"

namespace proxycam {

/// Deterministic Gaussian sampler (Box-Muller over a counter-based stream);
/// identical sequences for identical seeds on any platform.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : mix_(seed) {}
    double next();

private:
    SplitMix64 mix_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Apply read + shot noise in place (values are full-scale fractions).
void add_noise(Image& img, const NoiseModel& noise);

/// Quantize in place to the sensor bit depth (no-op for bit_depth == 0).
void quantize(Image& img, int bit_depth);

struct EdgeSynthesisOptions {
    double angle_deg = 10.0;     ///< slant from vertical
    int width_px = 96;
    int height_px = 72;
    double low = 0.15;           ///< dark plateau, full-scale fraction
    double high = 0.85;          ///< light plateau
    int subsamples = 4;          ///< pixel-aperture subsampling per axis
};

/// Photograph of an ideal slanted step edge through the given PSF:
/// convolution, pixel integration, noise, quantization. The PSF pitch must
/// subdivide the pixel pitch.
Image synth_edge(const PsfGrid& psf, double pixel_pitch_um, const EdgeSynthesisOptions& opt,
                 const NoiseModel& noise = {}, int bit_depth = 0);

/// Per-field-cell PSF kernels at pixel pitch, one per channel, covering the
/// sensor with a rows x cols grid of cells.
struct FovPsfSet {
    int grid_rows = 0;
    int grid_cols = 0;
    int channels = 1;
    std::vector<PsfGrid> kernels; ///< [cell_row * grid_cols + cell_col] * channels + ch

    const PsfGrid& kernel(int cell_row, int cell_col, int ch) const {
        return kernels[(size_t(cell_row) * grid_cols + cell_col) * channels + ch];
    }
    /// Identity response: delta kernels everywhere.
    static FovPsfSet delta(int grid_rows, int grid_cols, int channels, int kernel_size,
                           double pitch_um);
};

/// Spatially varying degradation: per-cell convolution with bilinear
/// blending of the cell results, then sensor noise. Input and output are
/// linear; boundaries are mirror-padded.
Image degrade_image(const Image& latent, const FovPsfSet& psfs, const SensorModel& sensor,
                    const NoiseModel& noise = {});

enum class CompandDirection { Compress, Decompress };

/// Invertible luminosity companding (piecewise power law with a linear
/// toe; exponent 2.4 above the knee, matching the familiar display curve).
/// Input must lie in [0, 1].
double compand_value(double v, CompandDirection dir);
Image compand(const Image& img, CompandDirection dir);

class ImagingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
