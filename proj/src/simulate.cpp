#include "proxycam/simulate.hpp"

#include <cmath>

#include "proxycam/parallel.hpp"

namespace proxycam {

Vec3 FovGrid::cell_center_mm(int cell, const SensorModel& sensor) const {
    const int r = cell / cols;
    const int c = cell % cols;
    const double x = ((c + 0.5) / cols - 0.5) * sensor.width_mm();
    const double y = ((r + 0.5) / rows - 0.5) * sensor.height_mm();
    return {x, y, 0.0};
}

std::pair<double, double> FovGrid::cell_angles(int cell, const SensorModel& sensor,
                                               double efl) const {
    const Vec3 p = cell_center_mm(cell, sensor);
    return {std::atan2(p.x, efl), std::atan2(p.y, efl)};
}

namespace {

double effective_psf_pitch(const SimulationConfig& cfg, const SensorModel& sensor) {
    return cfg.psf_pitch_um > 0.0 ? cfg.psf_pitch_um : sensor.pixel_pitch_um / 4.0;
}

std::vector<double> effective_wavelengths(const SimulationConfig& cfg, const SensorModel& sensor) {
    return cfg.wavelengths_um.empty() ? sensor.wavelengths_um : cfg.wavelengths_um;
}

std::vector<double> effective_weights(const SimulationConfig& cfg, const SensorModel& sensor,
                                      size_t n_wavelengths) {
    if (!cfg.weights.empty()) return cfg.weights;
    if (!sensor.channels.empty() && sensor.channels[0].response.size() == n_wavelengths)
        return sensor.channels[0].response;
    return std::vector<double>(n_wavelengths, 1.0 / double(n_wavelengths));
}

std::pair<double, double> spot_centroid(const std::vector<TraceRecord>& records) {
    double sx = 0.0, sy = 0.0;
    int n = 0;
    for (const auto& rec : records) {
        if (!rec.alive) continue;
        sx += rec.sensor_hit.x;
        sy += rec.sensor_hit.y;
        ++n;
    }
    return {sx / n, sy / n};
}

} // namespace

PsfGrid simulate_psf(const LensSystem& system, const FieldSpec& field, double lambda_um,
                     const SimulationConfig& cfg,
                     std::optional<std::pair<double, double>> center_mm) {
    BundleResult bundle =
        trace_bundle(system, field, {cfg.pupil_samples}, lambda_um, cfg.intersect);
    PupilField pupil = pupil_from_trace(bundle.records, system, lambda_um);

    PsfWindow window;
    window.samples = cfg.psf_window;
    window.pitch_um = effective_psf_pitch(cfg, system.sensor);
    const auto center = center_mm ? *center_mm : spot_centroid(bundle.records);
    window.center_x_mm = center.first;
    window.center_y_mm = center.second;

    return huygens_psf(pupil, window, &bundle.records);
}

PsfGrid simulate_channel_psf(const LensSystem& system, const FieldSpec& field,
                             const SimulationConfig& cfg) {
    const std::vector<double> wavelengths = effective_wavelengths(cfg, system.sensor);
    const std::vector<double> weights = effective_weights(cfg, system.sensor, wavelengths.size());
    if (weights.size() != wavelengths.size())
        throw DiffractionError("channel weights must match the wavelength list");

    if (wavelengths.size() == 1) return simulate_psf(system, field, wavelengths[0], cfg);

    // Shared window centered on the first wavelength's spot so the grids stay
    // co-registered; lateral color shows up inside the window.
    BundleResult ref_bundle =
        trace_bundle(system, field, {cfg.pupil_samples}, wavelengths[0], cfg.intersect);
    const auto center = spot_centroid(ref_bundle.records);

    std::vector<PsfGrid> psfs;
    psfs.reserve(wavelengths.size());
    for (double lambda : wavelengths)
        psfs.push_back(simulate_psf(system, field, lambda, cfg, center));
    return polychromatic_psf(psfs, wavelengths, weights);
}

Image simulate_edge_patch(const LensSystem& system, const FieldSpec& field,
                          const SimulationConfig& cfg, const NoiseModel& noise, int bit_depth) {
    const PsfGrid psf = simulate_channel_psf(system, field, cfg);
    return synth_edge(psf, system.sensor.pixel_pitch_um, cfg.edge, noise, bit_depth);
}

std::vector<FovSfra> simulate_grid_sfra(const LensSystem& system, const FovGrid& grid,
                                        const SimulationConfig& cfg, const NoiseModel& noise,
                                        int bit_depth) {
    const double efl = system.paraxial(effective_wavelengths(cfg, system.sensor)[0]).efl;
    std::vector<FovSfra> out(grid.cell_count());

    parallel_for(size_t(grid.cell_count()), [&](size_t cell) {
        FovSfra& row = out[cell];
        row.cell = int(cell);
        try {
            const auto [tx, ty] = grid.cell_angles(int(cell), system.sensor, efl);
            const FieldSpec field = FieldSpec::from_angles(tx, ty);
            NoiseModel cell_noise = noise;
            if (noise.enabled()) cell_noise.seed = noise.seed + 0x9e37 * (cell + 1);
            const Image patch = simulate_edge_patch(system, field, cfg, cell_noise, bit_depth);
            const SfrMeasurement m = measure_patch(patch);
            row.sfra = m.area.value;
            row.curve = m.curve;
            const std::vector<double> dense = resample_sfr(m.curve, 65);
            row.mtf_half_nyquist = dense[32]; // f = 0.25 cy/px
            row.valid = true;
        } catch (const std::exception&) {
            row.valid = false;
        }
    });
    return out;
}

FovPsfSet build_fov_psf_set(const LensSystem& system, int grid_rows, int grid_cols,
                            const SimulationConfig& cfg) {
    FovGrid grid{grid_rows, grid_cols};
    FovPsfSet set;
    set.grid_rows = grid_rows;
    set.grid_cols = grid_cols;
    set.channels = int(system.sensor.channels.size());
    set.kernels.resize(size_t(grid_rows) * grid_cols * set.channels);

    const std::vector<double> wavelengths = effective_wavelengths(cfg, system.sensor);
    const double qp_pitch = effective_psf_pitch(cfg, system.sensor);
    const int factor = std::max(1, int(std::round(system.sensor.pixel_pitch_um / qp_pitch)));
    const double efl = system.paraxial(wavelengths[0]).efl;

    parallel_for(size_t(grid.cell_count()), [&](size_t cell) {
        const auto [tx, ty] = grid.cell_angles(int(cell), system.sensor, efl);
        const FieldSpec field = FieldSpec::from_angles(tx, ty);

        BundleResult ref_bundle =
            trace_bundle(system, field, {cfg.pupil_samples}, wavelengths[0], cfg.intersect);
        const auto center = spot_centroid(ref_bundle.records);

        std::vector<PsfGrid> per_lambda;
        per_lambda.reserve(wavelengths.size());
        for (double lambda : wavelengths)
            per_lambda.push_back(simulate_psf(system, field, lambda, cfg, center));

        for (int ch = 0; ch < set.channels; ++ch) {
            PsfGrid poly = (wavelengths.size() == 1)
                               ? per_lambda[0]
                               : polychromatic_psf(per_lambda, wavelengths,
                                                   system.sensor.channels[ch].response);
            PsfGrid pixel_kernel = (factor > 1) ? downsample_psf(poly, factor) : std::move(poly);
            pixel_kernel.fov_index = int(cell);
            set.kernels[cell * set.channels + ch] = std::move(pixel_kernel);
        }
    });
    return set;
}

} // namespace proxycam
