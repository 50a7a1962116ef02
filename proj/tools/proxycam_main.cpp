#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "proxycam/pipeline.hpp"

using proxycam::RunConfig;

namespace {

void add_sim_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--pupil-samples", cfg.sim.pupil_samples, "grid across the entrance pupil");
    cmd->add_option("--psf-window", cfg.sim.psf_window, "PSF window samples (square)");
    cmd->add_option("--psf-pitch", cfg.sim.psf_pitch_um, "PSF pitch, um (0 = pixel pitch / 4)");
    cmd->add_option("--edge-angle", cfg.sim.edge.angle_deg, "slant angle, degrees");
    cmd->add_option("--patch-width", cfg.sim.edge.width_px, "edge patch width, px");
    cmd->add_option("--patch-height", cfg.sim.edge.height_px, "edge patch height, px");
}

void add_grid_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--grid-rows", cfg.grid_rows, "field grid rows");
    cmd->add_option("--grid-cols", cfg.grid_cols, "field grid columns");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"perturbed-lens simulation and proxy camera construction"};
    app.require_subcommand(1);

    RunConfig cfg;

    auto* trace = app.add_subcommand("trace", "trace a pupil bundle to the sensor");
    trace->add_option("--prescription", cfg.prescription_path)->required();
    trace->add_option("--fov", cfg.fovs, "normalized field height(s)");
    trace->add_option("--wavelength", cfg.wavelength_um, "um");
    trace->add_option("--out", cfg.output)->required();
    add_sim_options(trace, cfg);

    auto* psf = app.add_subcommand("psf", "diffraction PSFs per field");
    psf->add_option("--prescription", cfg.prescription_path)->required();
    psf->add_option("--fovs", cfg.fovs, "normalized field heights");
    psf->add_option("--wavelength", cfg.wavelength_um, "single wavelength, um (default: channel mix)");
    psf->add_option("--out", cfg.output)->required();
    psf->add_flag("--previews", cfg.previews, "also write 16-bit PGM previews");
    add_sim_options(psf, cfg);

    auto* edge = app.add_subcommand("edge", "synthetic slanted-edge photographs per field cell");
    edge->add_option("--prescription", cfg.prescription_path)->required();
    edge->add_option("--out", cfg.output)->required();
    edge->add_option("--noise-sigma", cfg.noise_read_sigma, "read noise, full-scale fraction");
    edge->add_option("--shot-gain", cfg.noise_shot_gain, "electrons per full-scale unit");
    edge->add_option("--seed", cfg.seed);
    edge->add_flag("--previews", cfg.previews);
    add_grid_options(edge, cfg);
    add_sim_options(edge, cfg);

    auto* sfr = app.add_subcommand("sfr", "measure SFR/SFRA from patches or a full image");
    sfr->add_option("--input", cfg.input_path, "image file or directory of edge patches")
        ->required();
    sfr->add_option("--out", cfg.output, "output directory")->required();
    sfr->add_flag("--curves", cfg.previews, "also dump per-cell SFR curves");
    add_grid_options(sfr, cfg);

    auto* optimize = app.add_subcommand("optimize", "fit the perturbation overlay to SFRA targets");
    optimize->add_option("--prescription", cfg.prescription_path)->required();
    optimize->add_option("--targets", cfg.targets_path)->required();
    optimize->add_option("--out", cfg.output)->required();
    optimize->add_option("--report", cfg.report_path, "iteration trace CSV");
    optimize->add_option("--max-iterations", cfg.optimizer.max_iterations);
    optimize->add_option("--eps-init", cfg.optimizer.eps_init);
    optimize->add_option("--gradient-tol", cfg.optimizer.gradient_tol);
    bool fixed_damping = false;
    optimize->add_flag("--fixed-damping", fixed_damping, "disable dynamic damping adaptation");
    bool mtf_metric = false;
    optimize->add_flag("--mtf-metric", mtf_metric,
                       "fit the SFR at 0.25 cy/px instead of the SFR area");
    add_grid_options(optimize, cfg);
    add_sim_options(optimize, cfg);

    auto* sample = app.add_subcommand("sample", "draw virtual cameras within tolerances");
    sample->add_option("--prescription", cfg.prescription_path)->required();
    sample->add_option("--count", cfg.count)->required();
    sample->add_option("--seed", cfg.seed);
    sample->add_option("--out", cfg.output)->required();

    auto* degrade = app.add_subcommand("degrade", "emit degraded/clean training pairs");
    degrade->add_option("--prescription", cfg.prescription_path)->required();
    degrade->add_option("--latents", cfg.latents_dir)->required();
    degrade->add_option("--count", cfg.count, "virtual cameras to sample");
    degrade->add_option("--seed", cfg.seed);
    degrade->add_option("--noise-sigma", cfg.noise_read_sigma);
    degrade->add_option("--shot-gain", cfg.noise_shot_gain);
    degrade->add_option("--out", cfg.output)->required();
    add_grid_options(degrade, cfg);
    add_sim_options(degrade, cfg);

    auto* verify = app.add_subcommand("verify", "re-check the hash manifest of a run directory");
    verify->add_option("--dir", cfg.input_path)->required();

    bool lenient = false;
    app.add_flag("--lenient", lenient, "warn instead of rejecting unknown prescription fields");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 returns 0 for --help; anything else is a usage error.
        return code == 0 ? proxycam::kExitOk : proxycam::kExitUsage;
    }

    cfg.lenient = lenient;
    if (optimize->parsed()) {
        cfg.optimizer.damping = fixed_damping ? proxycam::DampingMode::Fixed
                                              : proxycam::DampingMode::Dynamic;
        cfg.optimizer.metric = mtf_metric ? proxycam::TargetMetric::MtfHalfNyquist
                                          : proxycam::TargetMetric::SfrArea;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    return proxycam::run_pipeline(cfg);
}
