#include "proxycam/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "proxycam/hashing.hpp"
#include "proxycam/image.hpp"

namespace proxycam {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string config_hash_of(const RunConfig& cfg) { return hash_hex(fnv1a64(cfg.canonical_json())); }

// Prescriptions written by the tools carry the run's config hash.
void write_prescription_stamped(const std::string& path, const Prescription& p,
                                const RunConfig& cfg) {
    ordered_json j = ordered_json::parse(prescription_to_json(p));
    j["provenance"] = ordered_json{{"config_hash", config_hash_of(cfg)}};
    std::ofstream os(path);
    os << j.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write prescription: " + path);
}

Image load_latent(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".pcf8") return read_float_raster(path);
    if (ext == ".pgm" || ext == ".ppm") {
        // Integer formats arrive gamma-encoded; linearize them.
        return compand(read_pnm(path), CompandDirection::Decompress);
    }
    throw ImageIoError("unsupported latent format: " + path);
}

std::vector<std::string> list_latents(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".pcf8" || ext == ".pgm" || ext == ".ppm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ImageIoError("no latent images (.pcf8/.pgm/.ppm) in " + dir);
    return files;
}

} // namespace

std::string RunConfig::canonical_json() const {
    ordered_json j;
    j["subcommand"] = subcommand;
    j["prescription"] = prescription_path;
    j["targets"] = targets_path;
    j["latents"] = latents_dir;
    j["input"] = input_path;
    j["output"] = output;
    j["grid"] = {grid_rows, grid_cols};
    j["fovs"] = fovs;
    j["wavelength_um"] = wavelength_um;
    j["count"] = count;
    j["seed"] = seed;
    j["noise"] = {noise_read_sigma, noise_shot_gain};
    j["pupil_samples"] = sim.pupil_samples;
    j["psf_window"] = sim.psf_window;
    j["psf_pitch_um"] = sim.psf_pitch_um;
    j["edge"] = {sim.edge.angle_deg, sim.edge.width_px, sim.edge.height_px, sim.edge.low,
                 sim.edge.high, sim.edge.subsamples};
    j["optimizer"] = {optimizer.eps_init, optimizer.max_iterations, optimizer.gradient_tol,
                      int(optimizer.metric), int(optimizer.damping)};
    return j.dump();
}

void write_run_manifest(const std::string& dir, const RunConfig& config,
                        const std::vector<std::string>& files) {
    ordered_json manifest;
    const std::string cfg = config.canonical_json();
    manifest["tool"] = "proxycam";
    manifest["config"] = ordered_json::parse(cfg);
    manifest["config_hash"] = hash_hex(fnv1a64(cfg));
    ordered_json out_files = ordered_json::array();
    for (const auto& f : files) {
        ordered_json row;
        row["path"] = fs::relative(f, dir).string();
        row["fnv1a64"] = hash_hex(fnv1a64_file(f));
        out_files.push_back(row);
    }
    manifest["files"] = out_files;
    std::ofstream os(join_path(dir, "run.json"));
    os << manifest.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write run manifest in " + dir);
}

bool verify_run_dir(const std::string& dir, std::string* diagnostics) {
    std::ostringstream diag;
    const std::string manifest_path = join_path(dir, "run.json");
    std::ifstream is(manifest_path);
    if (!is) {
        if (diagnostics) *diagnostics = "missing run.json in " + dir;
        return false;
    }
    ordered_json manifest;
    try {
        is >> manifest;
    } catch (const std::exception& e) {
        if (diagnostics) *diagnostics = std::string("corrupt run.json: ") + e.what();
        return false;
    }
    bool ok = true;
    for (const auto& row : manifest["files"]) {
        const std::string rel = row["path"].get<std::string>();
        const std::string expect = row["fnv1a64"].get<std::string>();
        const std::string path = join_path(dir, rel);
        std::string got;
        try {
            got = hash_hex(fnv1a64_file(path));
        } catch (const std::exception&) {
            diag << rel << ": missing\n";
            ok = false;
            continue;
        }
        if (got != expect) {
            diag << rel << ": hash mismatch (" << got << " != " << expect << ")\n";
            ok = false;
        } else {
            diag << rel << ": ok\n";
        }
    }
    if (diagnostics) *diagnostics = diag.str();
    return ok;
}

SfraTargets read_targets_csv(const std::string& path, int grid_rows, int grid_cols) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open targets: " + path);
    SfraTargets targets;
    std::map<std::pair<int, int>, bool> seen;
    std::string line;
    bool header_skipped = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (line[0] == '#') continue; // metadata stamp
        if (!header_skipped) {
            header_skipped = true;
            if (!cols.empty() && cols[0] == "fov_x") continue; // header row
        }
        if (cols.size() < 3)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected fov_x,fov_y,sfra");
        if (cols[2].empty()) continue; // absent cell
        const int fx = std::stoi(cols[0]);
        const int fy = std::stoi(cols[1]);
        const double value = std::stod(cols[2]);
        if (fx < 0 || fx >= grid_cols || fy < 0 || fy >= grid_rows)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": cell out of grid");
        if (seen.count({fx, fy}))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate cell");
        if (!(value > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": sfra must be > 0");
        seen[{fx, fy}] = true;
        targets.cells.push_back(fy * grid_cols + fx);
        targets.values.push_back(value);
    }
    if (targets.cells.empty()) throw std::runtime_error("no target rows in " + path);
    return targets;
}

void write_targets_csv(const std::string& path, const std::vector<FovSfra>& rows,
                       const FovGrid& grid) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write targets: " + path);
    os << "fov_x,fov_y,sfra,quality\n";
    for (const auto& row : rows) {
        if (!row.valid) continue;
        const int fx = row.cell % grid.cols;
        const int fy = row.cell / grid.cols;
        os << fx << "," << fy << "," << fmt_double(row.sfra) << ",ok\n";
    }
}

namespace {

FieldSpec field_from_height(const LensSystem& system, double height, double lambda_um) {
    // Normalized field height along +y, fraction of the sensor half-height.
    const double efl = system.paraxial(lambda_um).efl;
    const double y = height * 0.5 * system.sensor.height_mm();
    return FieldSpec::from_angles(0.0, std::atan2(y, efl));
}

int cmd_trace(const RunConfig& cfg) {
    const Prescription p = parse_prescription(cfg.prescription_path, !cfg.lenient);
    const LensSystem system = p.realize();
    const double lambda = cfg.wavelength_um > 0 ? cfg.wavelength_um
                                                : system.sensor.wavelengths_um.front();
    const double height = cfg.fovs.empty() ? 0.0 : cfg.fovs.front();
    const FieldSpec field = field_from_height(system, height, lambda);

    const BundleResult bundle =
        trace_bundle(system, field, {cfg.sim.pupil_samples}, lambda, cfg.sim.intersect);

    fs::create_directories(cfg.output);
    const std::string csv_path = join_path(cfg.output, "trace.csv");
    std::ofstream os(csv_path);
    os << "ray,alive,x_mm,y_mm,opl_mm,terminated_at,reason\n";
    for (size_t i = 0; i < bundle.records.size(); ++i) {
        const TraceRecord& r = bundle.records[i];
        os << i << "," << (r.alive ? 1 : 0) << ","
           << fmt_double(r.alive ? r.sensor_hit.x : 0.0) << ","
           << fmt_double(r.alive ? r.sensor_hit.y : 0.0) << ","
           << fmt_double(r.alive ? r.opl : 0.0) << ","
           << (r.terminated_at ? std::to_string(*r.terminated_at) : "") << ","
           << to_string(r.reason) << "\n";
    }
    os << "# config_hash=" << config_hash_of(cfg) << "\n";
    os.close();
    std::cout << "traced " << bundle.launched << " rays, " << bundle.survived << " survived ("
              << fmt_double(100.0 * bundle.survival_fraction()) << "%)\n";
    write_run_manifest(cfg.output, cfg, {csv_path});
    return kExitOk;
}

int cmd_psf(const RunConfig& cfg) {
    const Prescription p = parse_prescription(cfg.prescription_path, !cfg.lenient);
    const LensSystem system = p.realize();
    fs::create_directories(cfg.output);

    std::vector<double> fovs = cfg.fovs.empty() ? std::vector<double>{0.0} : cfg.fovs;
    std::vector<std::string> files;
    for (size_t i = 0; i < fovs.size(); ++i) {
        const double lambda = cfg.wavelength_um > 0 ? cfg.wavelength_um
                                                    : system.sensor.wavelengths_um.front();
        const FieldSpec field = field_from_height(system, fovs[i], lambda);
        PsfGrid psf = cfg.wavelength_um > 0
                          ? simulate_psf(system, field, cfg.wavelength_um, cfg.sim)
                          : simulate_channel_psf(system, field, cfg.sim);
        psf.fov_index = int(i);

        Image img(psf.rows, psf.cols);
        img.pitch_um = psf.pitch_um;
        img.data = psf.intensity;
        const std::string base = "psf_" + std::to_string(i);
        const std::string raster = join_path(cfg.output, base + ".pcf8");
        write_float_raster(raster, img);
        files.push_back(raster);
        if (cfg.previews) {
            const std::string pgm = join_path(cfg.output, base + ".pgm");
            write_pgm16_preview(pgm, img);
            files.push_back(pgm);
        }
        std::cout << base << ": " << psf.rows << "x" << psf.cols << " @ "
                  << fmt_double(psf.pitch_um) << " um, center ("
                  << fmt_double(psf.center_x_mm) << ", " << fmt_double(psf.center_y_mm)
                  << ") mm\n";
    }
    write_run_manifest(cfg.output, cfg, files);
    return kExitOk;
}

int cmd_edge(const RunConfig& cfg) {
    const Prescription p = parse_prescription(cfg.prescription_path, !cfg.lenient);
    const LensSystem system = p.realize();
    const FovGrid grid{cfg.grid_rows, cfg.grid_cols};
    fs::create_directories(cfg.output);

    NoiseModel noise;
    noise.read_sigma = cfg.noise_read_sigma;
    noise.shot_gain = cfg.noise_shot_gain;
    noise.seed = cfg.seed;

    const double lambda = system.sensor.wavelengths_um.front();
    const double efl = system.paraxial(lambda).efl;

    std::vector<std::string> files;
    for (int cell = 0; cell < grid.cell_count(); ++cell) {
        const auto [tx, ty] = grid.cell_angles(cell, system.sensor, efl);
        NoiseModel cell_noise = noise;
        if (noise.enabled()) cell_noise.seed = noise.seed + 0x9e37 * (cell + 1);
        const Image patch = simulate_edge_patch(system, FieldSpec::from_angles(tx, ty), cfg.sim,
                                                cell_noise, system.sensor.bit_depth);
        const int fy = cell / grid.cols, fx = cell % grid.cols;
        const std::string base = "edge_" + std::to_string(fy) + "_" + std::to_string(fx);
        const std::string raster = join_path(cfg.output, base + ".pcf8");
        write_float_raster(raster, patch);
        files.push_back(raster);
        if (cfg.previews) {
            const std::string pgm = join_path(cfg.output, base + ".pgm");
            write_pgm16_preview(pgm, patch);
            files.push_back(pgm);
        }
    }
    write_run_manifest(cfg.output, cfg, files);
    std::cout << "wrote " << grid.cell_count() << " edge patches to " << cfg.output << "\n";
    return kExitOk;
}

int cmd_sfr(const RunConfig& cfg) {
    fs::create_directories(cfg.output);
    std::vector<std::string> files;
    const std::string csv_path = join_path(cfg.output, "sfr.csv");
    std::ofstream os(csv_path);
    os << "fov_x,fov_y,sfra,angle,quality\n";

    auto emit_curve = [&](const SfrCurve& curve, const std::string& name) {
        const std::string path = join_path(cfg.output, name);
        std::ofstream cs(path);
        cs << "freq,response\n";
        for (size_t i = 0; i < curve.frequencies.size(); ++i)
            cs << fmt_double(curve.frequencies[i]) << "," << fmt_double(curve.response[i]) << "\n";
        files.push_back(path);
    };

    if (fs::is_directory(cfg.input_path)) {
        // Directory of edge patches named edge_<row>_<col>.*
        std::vector<std::string> patches;
        for (const auto& e : fs::directory_iterator(cfg.input_path))
            if (e.path().extension() == ".pcf8") patches.push_back(e.path().string());
        std::sort(patches.begin(), patches.end());
        if (patches.empty()) throw ImageIoError("no .pcf8 patches in " + cfg.input_path);
        for (const auto& path : patches) {
            int fy = 0, fx = 0;
            const std::string stem = fs::path(path).stem().string();
            if (std::sscanf(stem.c_str(), "edge_%d_%d", &fy, &fx) != 2) continue;
            try {
                const SfrMeasurement m = measure_patch(read_float_raster(path));
                os << fx << "," << fy << "," << fmt_double(m.area.value) << ","
                   << fmt_double(m.edge.angle_deg) << "," << m.quality << "\n";
                if (cfg.previews) emit_curve(m.curve, stem + "_curve.csv");
            } catch (const SfrError& e) {
                os << fx << "," << fy << ",,," << "absent\n";
            }
        }
    } else {
        const std::string ext = fs::path(cfg.input_path).extension().string();
        const Image img = (ext == ".pcf8") ? read_float_raster(cfg.input_path)
                                           : read_pnm(cfg.input_path);
        const auto cells = measure_grid(img, cfg.grid_rows, cfg.grid_cols);
        for (const auto& cell : cells) {
            if (cell.present) {
                os << cell.fov_x << "," << cell.fov_y << ","
                   << fmt_double(cell.measurement.area.value) << ","
                   << fmt_double(cell.measurement.edge.angle_deg) << ","
                   << cell.measurement.quality << "\n";
                if (cfg.previews)
                    emit_curve(cell.measurement.curve,
                               "curve_" + std::to_string(cell.fov_y) + "_" +
                                   std::to_string(cell.fov_x) + ".csv");
            } else {
                os << cell.fov_x << "," << cell.fov_y << ",,,absent\n";
            }
        }
    }
    os << "# config_hash=" << config_hash_of(cfg) << "\n";
    os.close();
    files.insert(files.begin(), csv_path);
    write_run_manifest(cfg.output, cfg, files);
    std::cout << "wrote " << csv_path << "\n";
    return kExitOk;
}

int cmd_optimize(const RunConfig& cfg) {
    const Prescription ideal = parse_prescription(cfg.prescription_path, !cfg.lenient);
    OptimizerConfig ocfg = cfg.optimizer;
    ocfg.sim = cfg.sim;
    ocfg.grid = FovGrid{cfg.grid_rows, cfg.grid_cols};

    const SfraTargets targets = read_targets_csv(cfg.targets_path, cfg.grid_rows, cfg.grid_cols);
    const ProxyResult result = construct_proxy(ideal, targets, ocfg);

    const std::string parent = fs::path(cfg.output).parent_path().string();
    if (!parent.empty()) fs::create_directories(parent);
    write_prescription_stamped(cfg.output, result.proxy, cfg);

    if (!cfg.report_path.empty()) {
        std::ofstream rs(cfg.report_path);
        rs << "iter,merit,phi,grad_norm,eps_geomean,accepted\n";
        for (const auto& it : result.report.iterations)
            rs << it.iteration << "," << fmt_double(it.residual_ss) << ","
               << fmt_double(it.merit_phi) << "," << fmt_double(it.gradient_norm) << ","
               << fmt_double(it.eps_geomean) << "," << (it.accepted ? 1 : 0) << "\n";
        rs << "# config_hash=" << config_hash_of(cfg) << "\n";
    }
    std::cout << "optimize: " << result.report.message << "; residual " << std::scientific
              << result.report.initial_residual_ss << " -> " << result.report.final_residual_ss
              << "\n";
    return kExitOk;
}

int cmd_sample(const RunConfig& cfg) {
    const Prescription ideal = parse_prescription(cfg.prescription_path, !cfg.lenient);
    const auto cameras = sample_virtual_cameras(ideal, cfg.count, cfg.seed);
    fs::create_directories(cfg.output);
    std::vector<std::string> files;
    for (size_t i = 0; i < cameras.size(); ++i) {
        const std::string path = join_path(cfg.output, "camera_" + std::to_string(i) + ".json");
        write_prescription_stamped(path, cameras[i], cfg);
        files.push_back(path);
    }
    write_run_manifest(cfg.output, cfg, files);
    std::cout << "sampled " << cameras.size() << " virtual cameras\n";
    return kExitOk;
}

FovPsfSet adapt_channels(const FovPsfSet& set, int channels) {
    if (set.channels == channels) return set;
    FovPsfSet out;
    out.grid_rows = set.grid_rows;
    out.grid_cols = set.grid_cols;
    out.channels = channels;
    out.kernels.reserve(size_t(set.grid_rows) * set.grid_cols * channels);
    for (int cell = 0; cell < set.grid_rows * set.grid_cols; ++cell)
        for (int ch = 0; ch < channels; ++ch)
            out.kernels.push_back(set.kernels[size_t(cell) * set.channels + ch % set.channels]);
    return out;
}

int cmd_degrade(const RunConfig& cfg) {
    const Prescription ideal = parse_prescription(cfg.prescription_path, !cfg.lenient);
    const auto cameras = sample_virtual_cameras(ideal, cfg.count, cfg.seed);
    const auto latents = list_latents(cfg.latents_dir);
    fs::create_directories(cfg.output);

    const std::string manifest_path = join_path(cfg.output, "pairs.jsonl");
    std::ofstream manifest(manifest_path);
    std::vector<std::string> files;
    int made = 0, failed = 0;

    for (size_t ci = 0; ci < cameras.size(); ++ci) {
        FovPsfSet kernels;
        try {
            const LensSystem system = cameras[ci].realize();
            kernels = build_fov_psf_set(system, cfg.grid_rows, cfg.grid_cols, cfg.sim);
        } catch (const std::exception& e) {
            std::cerr << "camera " << ci << ": " << e.what() << " (skipping)\n";
            failed += int(latents.size());
            continue;
        }
        const LensSystem system = cameras[ci].realize();
        for (size_t li = 0; li < latents.size(); ++li) {
            try {
                const Image latent = load_latent(latents[li]);
                const FovPsfSet use = adapt_channels(kernels, latent.channels);
                NoiseModel noise;
                noise.read_sigma = cfg.noise_read_sigma;
                noise.shot_gain = cfg.noise_shot_gain;
                noise.seed = cfg.seed ^ fnv1a64("pair" + std::to_string(ci) + "_" +
                                                std::to_string(li));
                const Image degraded = degrade_image(latent, use, system.sensor, noise);

                const std::string base =
                    "pair_c" + std::to_string(ci) + "_l" + std::to_string(li);
                const std::string in_path = join_path(cfg.output, base + "_input.pcf8");
                const std::string tgt_path = join_path(cfg.output, base + "_target.pcf8");
                write_float_raster(in_path, degraded);
                write_float_raster(tgt_path, latent);
                files.push_back(in_path);
                files.push_back(tgt_path);

                ordered_json row;
                row["input_path"] = fs::path(in_path).filename().string();
                row["target_path"] = fs::path(tgt_path).filename().string();
                row["camera_id"] = cameras[ci].name;
                row["seed"] = noise.seed;
                manifest << row.dump() << "\n";
                ++made;
            } catch (const std::exception& e) {
                std::cerr << "pair (" << ci << ", " << li << "): " << e.what()
                          << " (continuing)\n";
                ++failed;
            }
        }
    }
    manifest.close();
    files.insert(files.begin(), manifest_path);
    write_run_manifest(cfg.output, cfg, files);
    std::cout << "made " << made << " pairs (" << failed << " failures)\n";
    return failed == 0 ? kExitOk : kExitComputeFailure;
}

int cmd_verify(const RunConfig& cfg) {
    std::string diag;
    const bool ok = verify_run_dir(cfg.input_path.empty() ? cfg.output : cfg.input_path, &diag);
    std::cout << diag;
    std::cout << (ok ? "verify: ok\n" : "verify: FAILED\n");
    return ok ? kExitOk : kExitComputeFailure;
}

} // namespace

int run_pipeline(const RunConfig& config) {
    try {
        if (config.subcommand == "trace") return cmd_trace(config);
        if (config.subcommand == "psf") return cmd_psf(config);
        if (config.subcommand == "edge") return cmd_edge(config);
        if (config.subcommand == "sfr") return cmd_sfr(config);
        if (config.subcommand == "optimize") return cmd_optimize(config);
        if (config.subcommand == "sample") return cmd_sample(config);
        if (config.subcommand == "degrade") return cmd_degrade(config);
        if (config.subcommand == "verify") return cmd_verify(config);
        std::cerr << "unknown subcommand: " << config.subcommand << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << config.subcommand << ": " << e.what() << "\n";
        return kExitComputeFailure;
    }
}

} // namespace proxycam
