#pragma once

#include <optional>
#include <vector>

#include "proxycam/diffraction.hpp"
#include "proxycam/imaging.hpp"
#include "proxycam/lens_system.hpp"
#include "proxycam/sfr.hpp"
#include "proxycam/trace.hpp"

namespace proxycam {

/// Knobs of the edge-imaging simulation shared by the PSF tools and the
/// optimizer merit chain.
struct SimulationConfig {
    int pupil_samples = 128;        ///< grid across the entrance pupil diameter
    int psf_window = 64;            ///< PSF samples (square) at quarter-pixel pitch
    double psf_pitch_um = 0.0;      ///< 0 = pixel pitch / 4
    std::vector<double> wavelengths_um; ///< empty = sensor list
    std::vector<double> weights;        ///< empty = first channel response
    EdgeSynthesisOptions edge;
    IntersectOptions intersect;
};

/// Rectangular field grid over the sensor; cell centers map to field angles
/// through the nominal focal length.
struct FovGrid {
    int rows = 3;
    int cols = 4;
    int cell_count() const { return rows * cols; }

    /// Sensor-plane center of a cell, mm (sensor centered at the origin).
    Vec3 cell_center_mm(int cell, const SensorModel& sensor) const;
    /// Field angles (radians) of a cell for a system with focal length efl.
    std::pair<double, double> cell_angles(int cell, const SensorModel& sensor, double efl) const;
};

/// PSF of one field and wavelength: trace, back-propagate, superpose.
/// Window centered on the geometric spot centroid unless a center is given.
PsfGrid simulate_psf(const LensSystem& system, const FieldSpec& field, double lambda_um,
                     const SimulationConfig& cfg,
                     std::optional<std::pair<double, double>> center_mm = {});

/// Channel-weighted PSF over the configured wavelength list.
PsfGrid simulate_channel_psf(const LensSystem& system, const FieldSpec& field,
                             const SimulationConfig& cfg);

/// Synthetic photograph of a slanted edge at one field cell.
Image simulate_edge_patch(const LensSystem& system, const FieldSpec& field,
                          const SimulationConfig& cfg, const NoiseModel& noise = {},
                          int bit_depth = 0);

struct FovSfra {
    int cell = 0;
    bool valid = false;
    double sfra = 0.0;
    double mtf_half_nyquist = 0.0; ///< SFR at 0.25 cycles/pixel
    SfrCurve curve;
};

/// Edge simulation + measurement for every cell of the grid. Cells whose
/// bundle dies are flagged invalid, never fatal.
std::vector<FovSfra> simulate_grid_sfra(const LensSystem& system, const FovGrid& grid,
                                        const SimulationConfig& cfg,
                                        const NoiseModel& noise = {}, int bit_depth = 0);

/// Per-cell, per-channel pixel-pitch kernels for image degradation.
FovPsfSet build_fov_psf_set(const LensSystem& system, int grid_rows, int grid_cols,
                            const SimulationConfig& cfg);

} // namespace proxycam
