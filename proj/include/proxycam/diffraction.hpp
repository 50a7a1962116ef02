#pragma once

#include <string>
#include <vector>

#include "proxycam/lens_system.hpp"
#include "proxycam/ray.hpp"
#include "proxycam/sensor.hpp"

namespace proxycam {

/// Wavelet sources on the exit-pupil plane, expressed in the sensor frame
/// (sensor plane at z = 0, pupil plane at z = plane_z < 0).
///
/// `directions` hold the reversed ray directions (sensor toward pupil), the
/// convention the obliquity factor expects.
struct PupilField {
    std::vector<Vec3> points;       ///< (x', y', z') on the pupil plane, mm
    std::vector<double> path_lengths; ///< OPL from the source wavefront, mm
    std::vector<Vec3> directions;   ///< reversed unit directions at the pupil
    Vec3 plane_normal{0, 0, 1};
    double plane_z = 0.0;           ///< pupil plane z in the sensor frame, mm
    double wavelength_um = 0.5876;
    double amplitude = 1.0;

    size_t size() const { return points.size(); }
};

/// Discrete intensity map on the sensor plane. Normalized to unit sum;
/// `raw_total` keeps the pre-normalization energy so absolute peak values
/// stay recoverable.
struct PsfGrid {
    std::vector<double> intensity;  ///< rows*cols, row-major, sum = 1
    int rows = 0;
    int cols = 0;
    double pitch_um = 0.5;
    double center_x_mm = 0.0;       ///< sensor position of the grid center
    double center_y_mm = 0.0;
    int fov_index = -1;
    double wavelength_um = -1.0;    ///< -1 marks a polychromatic grid
    double raw_total = 0.0;

    double at(int r, int c) const { return intensity[size_t(r) * cols + c]; }
    double& at(int r, int c) { return intensity[size_t(r) * cols + c]; }
    /// Sensor-plane x of column c / y of row r, mm.
    double sample_x(int c) const { return center_x_mm + (c - 0.5 * (cols - 1)) * pitch_um * 1e-3; }
    double sample_y(int r) const { return center_y_mm + (r - 0.5 * (rows - 1)) * pitch_um * 1e-3; }
};

/// Sensor window for PSF synthesis.
struct PsfWindow {
    int samples = 64;       ///< square grid
    double pitch_um = 0.5;
    double center_x_mm = 0.0;
    double center_y_mm = 0.0;
};

/// Obliquity factor of a wavelet: half the difference of the cosines the
/// propagation direction `r` and the (reversed) ray direction `d` make with
/// the pupil normal `n`.
double obliquity_factor(const Vec3& d, const Vec3& r, const Vec3& n);

/// Carry surviving rays from the sensor plane back to the exit-pupil plane
/// and collect them as wavelet sources. Fills each record's `pupil_point`.
/// Throws DiffractionError when no ray survived.
PupilField pupil_from_trace(std::vector<TraceRecord>& records, const LensSystem& system,
                            double lambda_um);

/// Coherent Huygens superposition of the pupil field over the sensor window.
/// Throws DiffractionError when more than `max_outside_fraction` of the
/// geometric ray hits fall outside the window.
PsfGrid huygens_psf(const PupilField& field, const PsfWindow& window,
                    const std::vector<TraceRecord>* geometric_hits = nullptr,
                    double max_outside_fraction = 0.01);

/// Wavelength-weighted combination of co-registered grids (trapezoid over
/// the sampled wavelengths), renormalized to unit sum.
PsfGrid polychromatic_psf(const std::vector<PsfGrid>& psfs, const std::vector<double>& wavelengths_um,
                          const std::vector<double>& response);

/// Aberration-free converging pupil field: wavelets on a disc of
/// `radius_mm` at distance `distance_mm` from the sensor, all in phase at
/// the on-axis focus. Used as the diffraction-limited reference.
PupilField ideal_pupil_field(double radius_mm, double distance_mm, double lambda_um,
                             int samples_across);

/// Box-average downsample by an integer factor (e.g. quarter-pixel PSF to
/// pixel pitch). Preserves unit sum.
PsfGrid downsample_psf(const PsfGrid& psf, int factor);

class DiffractionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
