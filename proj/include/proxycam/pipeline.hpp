#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proxycam/optimizer.hpp"

namespace proxycam {

/// Exit codes shared by the CLI and the pipeline runners.
inline constexpr int kExitOk = 0;
inline constexpr int kExitComputeFailure = 1;
inline constexpr int kExitUsage = 2;

/// Everything a subcommand run needs; echoed into the output directory.
struct RunConfig {
    std::string subcommand;
    std::string prescription_path;
    std::string targets_path;       ///< optimize
    std::string latents_dir;        ///< degrade
    std::string input_path;         ///< sfr
    std::string output;             ///< directory or file per subcommand
    std::string report_path;        ///< optimize iteration trace
    int grid_rows = 3;
    int grid_cols = 4;
    std::vector<double> fovs;       ///< psf/trace/edge: normalized field heights
    double wavelength_um = 0.0;     ///< 0 = prescription default list
    int count = 1;                  ///< sample/degrade camera count
    std::uint64_t seed = 0;
    double noise_read_sigma = 0.0;
    double noise_shot_gain = 0.0;
    bool lenient = false;
    bool previews = false;          ///< also write PGM previews
    SimulationConfig sim;
    OptimizerConfig optimizer;

    std::string canonical_json() const; ///< stable serialization for the config hash
};

/// Run one subcommand end to end; returns an exit code and never throws.
int run_pipeline(const RunConfig& config);

/// Write the config echo + file hash manifest into `dir`.
void write_run_manifest(const std::string& dir, const RunConfig& config,
                        const std::vector<std::string>& files);

/// Re-check the hash manifest of a run directory; returns true when every
/// file matches.
bool verify_run_dir(const std::string& dir, std::string* diagnostics = nullptr);

/// Targets CSV: rows fov_x,fov_y,sfra[,quality]. Cells must be unique and
/// areas positive.
SfraTargets read_targets_csv(const std::string& path, int grid_rows, int grid_cols);
void write_targets_csv(const std::string& path, const std::vector<FovSfra>& rows,
                       const FovGrid& grid);

} // namespace proxycam
