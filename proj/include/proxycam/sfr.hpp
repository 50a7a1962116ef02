#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxycam/image.hpp"

namespace proxycam {

/// Sensor Nyquist in cycles/pixel.
inline constexpr double kNyquist = 0.5;
/// Resampling interval of the edge profile, in pixels.
inline constexpr double kEsfBinWidth = 0.25;

struct EdgeEstimate {
    double angle_deg = 0.0;   ///< slant from the vertical axis
    double offset_px = 0.0;   ///< x of the edge at the patch center row
    double fit_residual_px = 0.0;
    bool dark_to_light = true;
};

/// Edge spread function resampled at quarter-pixel intervals.
struct EsfProfile {
    std::vector<double> samples;     ///< mean value per bin
    std::vector<int> bin_counts;     ///< pixels contributing per bin
    double bin_width_px = kEsfBinWidth;
    double angle_deg = 0.0;
    double offset_px = 0.0;
    int empty_bins = 0;
};

struct SfrCurve {
    std::vector<double> frequencies; ///< cycles/pixel, strictly increasing, f[0] = 0
    std::vector<double> response;    ///< response[0] = 1
};

struct Sfra {
    double value = 0.0;   ///< area under the SFR up to Nyquist, cycles/pixel
    int fov_index = -1;
};

struct SfrOptions {
    double min_angle_deg = 5.0;
    double max_angle_deg = 15.0;
    bool hamming_window = true;
    bool derivative_correction = true; ///< divide out the centered-difference response
    bool bin_average = true;           ///< quarter-pixel bin averaging; false keeps one sample per bin
    double max_empty_bin_fraction = 0.05;
};

/// Slant angle and offset of the dominant straight edge in a patch, from a
/// line fit through per-row crossing centroids. Throws SfrError when no
/// edge is found or the angle is outside [min_angle, max_angle].
EdgeEstimate estimate_edge(const Image& patch, const SfrOptions& opt = {});

/// Project every pixel onto the edge normal and average within
/// quarter-pixel bins. Throws SfrError when too many interior bins are
/// empty (edge too short for the patch).
EsfProfile build_esf(const Image& patch, const EdgeEstimate& edge, const SfrOptions& opt = {});

/// Differentiate, window, DFT and normalize: the measured SFR up to the
/// sensor Nyquist.
SfrCurve sfr_from_esf(const EsfProfile& esf, const SfrOptions& opt = {});

/// Trapezoid area of the response over [0, Nyquist].
Sfra sfr_area(const SfrCurve& curve);

/// Linear interpolation of the curve onto a uniform frequency grid,
/// for curve-to-curve comparisons.
std::vector<double> resample_sfr(const SfrCurve& curve, int samples);

/// Convenience: full patch-to-SFRA chain.
struct SfrMeasurement {
    EdgeEstimate edge;
    SfrCurve curve;
    Sfra area;
    std::string quality = "ok";
};
SfrMeasurement measure_patch(const Image& patch, const SfrOptions& opt = {});

/// Per-cell measurement over a rows x cols grid of an image. Cells without
/// a usable edge are reported absent rather than zero.
struct GridCellMeasurement {
    int fov_x = 0;   ///< column index of the grid cell
    int fov_y = 0;   ///< row index of the grid cell
    bool present = false;
    SfrMeasurement measurement;
};
std::vector<GridCellMeasurement> measure_grid(const Image& image, int grid_rows, int grid_cols,
                                              const SfrOptions& opt = {});

class SfrError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
