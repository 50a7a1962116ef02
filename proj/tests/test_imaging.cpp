#include <doctest.h>

#include <cmath>
#include <numbers>

#include "proxycam/imaging.hpp"
#include "proxycam/rng.hpp"

using namespace proxycam;

namespace {

constexpr double kPi = std::numbers::pi;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

PsfGrid gaussian_kernel(int size, double pitch_um, double sigma_um) {
    PsfGrid psf;
    psf.rows = psf.cols = size;
    psf.pitch_um = pitch_um;
    psf.intensity.assign(size_t(size) * size, 0.0);
    const double c = 0.5 * (size - 1);
    double total = 0.0;
    for (int r = 0; r < size; ++r)
        for (int cidx = 0; cidx < size; ++cidx) {
            const double dx = (cidx - c) * pitch_um, dy = (r - c) * pitch_um;
            const double v = std::exp(-(dx * dx + dy * dy) / (2 * sigma_um * sigma_um));
            psf.at(r, cidx) = v;
            total += v;
        }
    for (double& v : psf.intensity) v /= total;
    psf.raw_total = 1.0;
    return psf;
}

Image random_latent(int rows, int cols, int channels, std::uint64_t seed) {
    Image img(rows, cols, channels);
    SplitMix64 rng(seed);
    // Smooth random field: sum of a few low-frequency waves.
    for (int ch = 0; ch < channels; ++ch) {
        const double ax = rng.next_in(0.5, 1.5), ay = rng.next_in(0.5, 1.5);
        const double px = rng.next_in(0, 2 * kPi), py = rng.next_in(0, 2 * kPi);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                img.at(r, c, ch) =
                    0.5 + 0.2 * std::sin(ax * 2 * kPi * r / rows + px) *
                              std::cos(ay * 2 * kPi * c / cols + py);
    }
    return img;
}

} // namespace

TEST_CASE("gaussian stream: deterministic and roughly standard normal") {
    GaussianStream a(1234), b(1234);
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = a.next();
        REQUIRE(x == b.next());
        mean += x / n;
        var += x * x / n;
    }
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("noise: identical seeds give bit-identical fields, zero model is a no-op") {
    Image a(32, 48, 1, 0.5), b(32, 48, 1, 0.5), c(32, 48, 1, 0.5);
    NoiseModel noise;
    noise.read_sigma = 0.02;
    noise.shot_gain = 1000.0;
    noise.seed = 99;
    add_noise(a, noise);
    add_noise(b, noise);
    REQUIRE(a.data == b.data);

    add_noise(c, NoiseModel{});
    for (double v : c.data) REQUIRE(v == 0.5);
}

TEST_CASE("quantize: rounds to the level grid and clamps") {
    Image img(1, 4);
    img.data = {-0.2, 0.31, 0.72, 1.4};
    quantize(img, 8);
    CHECK(img.data[0] == 0.0);
    CHECK(img.data[1] == doctest::Approx(std::round(0.31 * 255) / 255).epsilon(1e-12));
    CHECK(img.data[3] == 1.0);
}

TEST_CASE("synth_edge: delta PSF and zero noise give the ideal resampled step") {
    PsfGrid delta;
    delta.rows = delta.cols = 9;
    delta.pitch_um = 0.5;
    delta.intensity.assign(81, 0.0);
    delta.at(4, 4) = 1.0;
    delta.raw_total = 1.0;

    EdgeSynthesisOptions opt;
    opt.angle_deg = 10.0;
    opt.width_px = 48;
    opt.height_px = 40;
    const Image patch = synth_edge(delta, 2.0, opt);

    // Oracle: coverage fraction of the bright half-plane over the same 4x4
    // subsample aperture.
    const double theta = opt.angle_deg * kPi / 180.0;
    const double cx = 0.5 * (opt.width_px - 1), cy = 0.5 * (opt.height_px - 1);
    for (int y = 0; y < opt.height_px; ++y) {
        for (int x = 0; x < opt.width_px; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < 4; ++sy)
                for (int sx = 0; sx < 4; ++sx) {
                    const double px = x - cx + (sx + 0.5) / 4.0 - 0.5;
                    const double py = y - cy + (sy + 0.5) / 4.0 - 0.5;
                    const double d = (px - py * std::tan(theta)) * std::cos(theta);
                    acc += d >= 0.0 ? 1.0 : 0.0;
                }
            const double expected = opt.low + (opt.high - opt.low) * acc / 16.0;
            REQUIRE(std::abs(patch.at(y, x) - expected) < 1e-9);
        }
    }
}

TEST_CASE("synth_edge: Gaussian PSF reproduces the analytic integrated erf profile") {
    const double sigma_px = 1.0, pitch_um = 2.0;
    const PsfGrid psf = gaussian_kernel(64, pitch_um / 4.0, sigma_px * pitch_um);

    EdgeSynthesisOptions opt;
    opt.angle_deg = 10.0;
    opt.width_px = 96;
    opt.height_px = 72;
    const Image patch = synth_edge(psf, pitch_um, opt);

    const double theta = opt.angle_deg * kPi / 180.0;
    const double cx = 0.5 * (opt.width_px - 1), cy = 0.5 * (opt.height_px - 1);
    double ss = 0.0;
    int n = 0;
    for (int y = 0; y < opt.height_px; ++y) {
        for (int x = 0; x < opt.width_px; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < 4; ++sy)
                for (int sx = 0; sx < 4; ++sx) {
                    const double px = x - cx + (sx + 0.5) / 4.0 - 0.5;
                    const double py = y - cy + (sy + 0.5) / 4.0 - 0.5;
                    const double d = (px - py * std::tan(theta)) * std::cos(theta);
                    acc += normal_cdf(d / sigma_px);
                }
            const double expected = opt.low + (opt.high - opt.low) * acc / 16.0;
            ss += (patch.at(y, x) - expected) * (patch.at(y, x) - expected);
            ++n;
        }
    }
    const double rms = std::sqrt(ss / n) / (opt.high - opt.low); // of full scale
    CHECK(rms < 1e-3);
}

TEST_CASE("synth_edge: fixed noise seed is bit-identical across runs") {
    const PsfGrid psf = gaussian_kernel(32, 0.5, 2.0);
    EdgeSynthesisOptions opt;
    NoiseModel noise;
    noise.read_sigma = 0.01;
    noise.seed = 4242;
    const Image a = synth_edge(psf, 2.0, opt, noise, 12);
    const Image b = synth_edge(psf, 2.0, opt, noise, 12);
    REQUIRE(a.data == b.data);
}

TEST_CASE("synth_edge: patch smaller than the PSF support is rejected") {
    const PsfGrid psf = gaussian_kernel(64, 1.0, 4.0); // 64 px support
    EdgeSynthesisOptions opt;
    opt.width_px = 32;
    opt.height_px = 24;
    CHECK_THROWS_AS(synth_edge(psf, 1.0, opt), ImagingError);
}

TEST_CASE("degrade: delta kernels and zero noise reproduce the latent exactly") {
    const Image latent = random_latent(64, 80, 2, 7);
    const FovPsfSet psfs = FovPsfSet::delta(3, 4, 2, 9, 2.0);
    SensorModel sensor;
    const Image out = degrade_image(latent, psfs, sensor);
    REQUIRE(out.data.size() == latent.data.size());
    for (size_t i = 0; i < out.data.size(); ++i)
        REQUIRE(out.data[i] == doctest::Approx(latent.data[i]).epsilon(1e-12));
}

TEST_CASE("degrade: unit-sum kernels keep a constant image constant everywhere") {
    Image flat(48, 64, 1, 0.37);
    FovPsfSet psfs;
    psfs.grid_rows = 2;
    psfs.grid_cols = 3;
    psfs.channels = 1;
    SplitMix64 rng(15);
    for (int i = 0; i < 6; ++i)
        psfs.kernels.push_back(gaussian_kernel(11, 2.0, rng.next_in(1.0, 6.0)));
    SensorModel sensor;
    const Image out = degrade_image(flat, psfs, sensor);
    for (double v : out.data) REQUIRE(std::abs(v - 0.37) < 1e-9);
}

TEST_CASE("degrade: single-cell set matches a dense convolution oracle") {
    const Image latent = random_latent(40, 56, 1, 21);
    FovPsfSet psfs;
    psfs.grid_rows = 1;
    psfs.grid_cols = 1;
    psfs.channels = 1;
    psfs.kernels.push_back(gaussian_kernel(9, 2.0, 3.0));
    SensorModel sensor;
    const Image out = degrade_image(latent, psfs, sensor);

    // Independent dense convolution with mirrored borders.
    const PsfGrid& k = psfs.kernels[0];
    auto mirror = [](int i, int n) {
        const int period = 2 * (n - 1);
        i = ((i % period) + period) % period;
        return i < n ? i : period - i;
    };
    for (int y = 0; y < latent.rows; ++y) {
        for (int x = 0; x < latent.cols; ++x) {
            double acc = 0.0;
            for (int j = 0; j < k.rows; ++j)
                for (int i = 0; i < k.cols; ++i) {
                    const int sy = mirror(y + k.rows / 2 - j, latent.rows);
                    const int sx = mirror(x + k.cols / 2 - i, latent.cols);
                    acc += k.at(j, i) * latent.at(sy, sx);
                }
            REQUIRE(std::abs(out.at(y, x) - acc) < 1e-6);
        }
    }
}

TEST_CASE("degrade: noiseless energy is preserved within 0.1 percent") {
    const Image latent = random_latent(96, 128, 1, 33);
    FovPsfSet psfs;
    psfs.grid_rows = 2;
    psfs.grid_cols = 2;
    psfs.channels = 1;
    SplitMix64 rng(44);
    for (int i = 0; i < 4; ++i)
        psfs.kernels.push_back(gaussian_kernel(9, 2.0, rng.next_in(1.5, 5.0)));
    SensorModel sensor;
    const Image out = degrade_image(latent, psfs, sensor);
    CHECK(std::abs(out.sum() - latent.sum()) / latent.sum() < 1e-3);
}

TEST_CASE("degrade: blended output converges as the grid is refined") {
    const Image latent = random_latent(64, 64, 1, 55);
    SensorModel sensor;

    // Smooth kernel field: sigma varies linearly across the sensor.
    auto kernel_at = [&](double fx, double fy) {
        const double sigma = 2.0 + 3.0 * fx + 2.0 * fy;
        return gaussian_kernel(11, 2.0, sigma);
    };
    auto build = [&](int g) {
        FovPsfSet set;
        set.grid_rows = g;
        set.grid_cols = g;
        set.channels = 1;
        for (int r = 0; r < g; ++r)
            for (int c = 0; c < g; ++c)
                set.kernels.push_back(kernel_at((c + 0.5) / g, (r + 0.5) / g));
        return set;
    };

    const Image ref = degrade_image(latent, build(16), sensor);
    double prev = 1e9;
    for (int g : {2, 4, 8}) {
        const Image out = degrade_image(latent, build(g), sensor);
        double l2 = 0.0;
        for (size_t i = 0; i < out.data.size(); ++i)
            l2 += (out.data[i] - ref.data[i]) * (out.data[i] - ref.data[i]);
        l2 = std::sqrt(l2 / out.data.size());
        REQUIRE(l2 < prev);
        prev = l2;
    }
}

TEST_CASE("degrade: noise fields are deterministic under a fixed seed") {
    const Image latent = random_latent(32, 32, 1, 66);
    const FovPsfSet psfs = FovPsfSet::delta(1, 1, 1, 5, 2.0);
    SensorModel sensor;
    NoiseModel noise;
    noise.read_sigma = 0.01;
    noise.shot_gain = 500.0;
    noise.seed = 31337;
    const Image a = degrade_image(latent, psfs, sensor, noise);
    const Image b = degrade_image(latent, psfs, sensor, noise);
    REQUIRE(a.data == b.data);
}

TEST_CASE("compand: endpoints, inverse pair, monotone") {
    CHECK(compand_value(0.0, CompandDirection::Compress) == 0.0);
    CHECK(compand_value(1.0, CompandDirection::Compress) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(compand_value(0.0, CompandDirection::Decompress) == 0.0);
    CHECK(compand_value(1.0, CompandDirection::Decompress) == doctest::Approx(1.0).epsilon(1e-12));

    SplitMix64 rng(77);
    double prev_c = -1.0;
    for (int i = 0; i < 10000; ++i) {
        const double v = i / 9999.0;
        const double c = compand_value(v, CompandDirection::Compress);
        REQUIRE(c >= prev_c); // monotone
        prev_c = c;
        const double back = compand_value(c, CompandDirection::Decompress);
        REQUIRE(std::abs(back - v) < 1e-9);

        const double u = rng.next_in(0.0, 1.0);
        const double round =
            compand_value(compand_value(u, CompandDirection::Compress), CompandDirection::Decompress);
        REQUIRE(std::abs(round - u) < 1e-9);
    }
}

TEST_CASE("compand: out-of-range input is rejected") {
    CHECK_THROWS_AS(compand_value(-0.01, CompandDirection::Compress), ImagingError);
    CHECK_THROWS_AS(compand_value(1.01, CompandDirection::Decompress), ImagingError);
}
