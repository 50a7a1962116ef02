#include "proxycam/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "proxycam/parallel.hpp"
#include "proxycam/rng.hpp"

namespace proxycam {

// ---------------------------------------------------------------------------
// Noise

double GaussianStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = mix_.next_double();
    const double u2 = mix_.next_double();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
}

void add_noise(Image& img, const NoiseModel& noise) {
    if (!noise.enabled()) return;
    GaussianStream rng(noise.seed);
    for (double& v : img.data) {
        double sigma2 = noise.read_sigma * noise.read_sigma;
        if (noise.shot_gain > 0.0) sigma2 += std::max(v, 0.0) / noise.shot_gain;
        v += std::sqrt(sigma2) * rng.next();
    }
}

void quantize(Image& img, int bit_depth) {
    if (bit_depth <= 0) return;
    const double levels = double((1u << bit_depth) - 1);
    for (double& v : img.data) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        v = std::round(clamped * levels) / levels;
    }
}

// ---------------------------------------------------------------------------
// Slanted-edge synthesis

Image synth_edge(const PsfGrid& psf, double pixel_pitch_um, const EdgeSynthesisOptions& opt,
                 const NoiseModel& noise, int bit_depth) {
    if (opt.width_px <= 0 || opt.height_px <= 0) throw ImagingError("patch size must be positive");
    if (opt.angle_deg < 5.0 || opt.angle_deg > 15.0)
        throw ImagingError("edge angle outside the supported [5, 15] degree band");
    if (psf.rows <= 0 || psf.cols <= 0) throw ImagingError("empty PSF");
    const double kernel_extent_px =
        std::max(psf.rows, psf.cols) * psf.pitch_um / pixel_pitch_um;
    if (kernel_extent_px > std::min(opt.width_px, opt.height_px))
        throw ImagingError("patch too small for the PSF support");

    // The image of a straight edge through a kernel depends only on the
    // signed distance to the edge, so the convolution collapses to the
    // kernel's cumulative mass along the edge normal. Sorted projections
    // with a prefix sum make the lookup exact for the discrete kernel.
    const double theta = opt.angle_deg * std::numbers::pi / 180.0;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);

    std::vector<std::pair<double, double>> projected; // (distance, mass)
    projected.reserve(size_t(psf.rows) * psf.cols);
    double total = 0.0;
    for (int r = 0; r < psf.rows; ++r) {
        const double ky = (r - 0.5 * (psf.rows - 1)) * psf.pitch_um / pixel_pitch_um;
        for (int c = 0; c < psf.cols; ++c) {
            const double kx = (c - 0.5 * (psf.cols - 1)) * psf.pitch_um / pixel_pitch_um;
            const double v = psf.at(r, c);
            if (v == 0.0) continue;
            projected.emplace_back(kx * cos_t - ky * sin_t, v);
            total += v;
        }
    }
    std::sort(projected.begin(), projected.end());
    std::vector<double> proj_dist(projected.size());
    std::vector<double> prefix(projected.size() + 1, 0.0);
    for (size_t i = 0; i < projected.size(); ++i) {
        proj_dist[i] = projected[i].first;
        prefix[i + 1] = prefix[i] + projected[i].second / total;
    }

    // Fraction of kernel mass on the bright side of a point at distance d.
    auto edge_response = [&](double d) {
        const auto it = std::upper_bound(proj_dist.begin(), proj_dist.end(), d);
        return prefix[size_t(it - proj_dist.begin())];
    };

    Image patch(opt.height_px, opt.width_px);
    patch.pitch_um = pixel_pitch_um;
    const double cx = 0.5 * (opt.width_px - 1);
    const double cy = 0.5 * (opt.height_px - 1);
    const int ss = std::max(1, opt.subsamples);

    for (int y = 0; y < opt.height_px; ++y) {
        for (int x = 0; x < opt.width_px; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < ss; ++sy) {
                for (int sx = 0; sx < ss; ++sx) {
                    const double px = x - cx + (sx + 0.5) / ss - 0.5;
                    const double py = y - cy + (sy + 0.5) / ss - 0.5;
                    // Edge through the patch center, slanted by theta from vertical.
                    const double dist = (px - py * std::tan(theta)) * cos_t;
                    acc += edge_response(dist);
                }
            }
            patch.at(y, x) = opt.low + (opt.high - opt.low) * acc / double(ss * ss);
        }
    }

    add_noise(patch, noise);
    quantize(patch, bit_depth);
    return patch;
}

// ---------------------------------------------------------------------------
// Spatially varying degradation

FovPsfSet FovPsfSet::delta(int grid_rows, int grid_cols, int channels, int kernel_size,
                           double pitch_um) {
    FovPsfSet set;
    set.grid_rows = grid_rows;
    set.grid_cols = grid_cols;
    set.channels = channels;
    PsfGrid delta;
    delta.rows = kernel_size;
    delta.cols = kernel_size;
    delta.pitch_um = pitch_um;
    delta.intensity.assign(size_t(kernel_size) * kernel_size, 0.0);
    delta.intensity[(size_t(kernel_size / 2)) * kernel_size + kernel_size / 2] = 1.0;
    delta.raw_total = 1.0;
    set.kernels.assign(size_t(grid_rows) * grid_cols * channels, delta);
    return set;
}

namespace {

// Mirror (reflect-101) index into [0, n).
inline int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return (i < n) ? i : period - i;
}

// Convolution of one plane with one kernel over a row/column window,
// mirror padding at the image borders.
struct CellConv {
    int y0 = 0, x0 = 0, h = 0, w = 0;
    std::vector<double> v;
    double at(int y, int x) const { return v[size_t(y - y0) * w + (x - x0)]; }
};

CellConv convolve_window(const double* src, int rows, int cols, const PsfGrid& kernel,
                         int y0, int y1, int x0, int x1) {
    CellConv out;
    out.y0 = std::max(0, y0);
    out.x0 = std::max(0, x0);
    out.h = std::min(rows, y1) - out.y0;
    out.w = std::min(cols, x1) - out.x0;
    if (out.h <= 0 || out.w <= 0) return out;
    out.v.assign(size_t(out.h) * out.w, 0.0);

    const int kr = kernel.rows, kc = kernel.cols;
    const int oy = kr / 2, ox = kc / 2;
    for (int y = out.y0; y < out.y0 + out.h; ++y) {
        for (int x = out.x0; x < out.x0 + out.w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < kr; ++j) {
                const int sy = mirror_index(y + oy - j, rows);
                const double* srow = src + size_t(sy) * cols;
                const double* krow = kernel.intensity.data() + size_t(j) * kc;
                for (int i = 0; i < kc; ++i) {
                    const int sx = mirror_index(x + ox - i, cols);
                    acc += krow[i] * srow[sx];
                }
            }
            out.v[size_t(y - out.y0) * out.w + (x - out.x0)] = acc;
        }
    }
    return out;
}

} // namespace

Image degrade_image(const Image& latent, const FovPsfSet& psfs, const SensorModel& sensor,
                    const NoiseModel& noise) {
    if (psfs.grid_rows <= 0 || psfs.grid_cols <= 0)
        throw ImagingError("PSF set does not cover the sensor");
    if (latent.channels != psfs.channels)
        throw ImagingError("latent channel count does not match the PSF set");
    if (latent.rows <= 0 || latent.cols <= 0) throw ImagingError("empty latent image");

    const int rows = latent.rows, cols = latent.cols;
    const int gr = psfs.grid_rows, gc = psfs.grid_cols;

    Image out(rows, cols, latent.channels);
    out.pitch_um = sensor.pixel_pitch_um;

    // Cell centers in pixel coordinates.
    const double cell_h = double(rows) / gr;
    const double cell_w = double(cols) / gc;

    for (int ch = 0; ch < latent.channels; ++ch) {
        // Each cell's convolution is needed only where its bilinear weight is
        // nonzero: one cell span around its center in either direction.
        std::vector<CellConv> cell_results(size_t(gr) * gc);
        parallel_for(size_t(gr) * gc, [&](size_t cell) {
            const int cy = int(cell) / gc;
            const int cx = int(cell) % gc;
            const int y0 = int(std::floor((cy - 0.5) * cell_h - 0.5));
            const int y1 = int(std::ceil((cy + 1.5) * cell_h + 0.5));
            const int x0 = int(std::floor((cx - 0.5) * cell_w - 0.5));
            const int x1 = int(std::ceil((cx + 1.5) * cell_w + 0.5));
            cell_results[cell] =
                convolve_window(latent.plane(ch), rows, cols, psfs.kernel(cy, cx, ch),
                                y0, y1, x0, x1);
        });

        double* dst = out.plane(ch);
        for (int y = 0; y < rows; ++y) {
            const double gy = (y + 0.5) / cell_h - 0.5;
            const int y0 = std::clamp(int(std::floor(gy)), 0, gr - 1);
            const int y1 = std::min(y0 + 1, gr - 1);
            const double wy = std::clamp(gy - y0, 0.0, 1.0);
            for (int x = 0; x < cols; ++x) {
                const double gx = (x + 0.5) / cell_w - 0.5;
                const int x0 = std::clamp(int(std::floor(gx)), 0, gc - 1);
                const int x1 = std::min(x0 + 1, gc - 1);
                const double wx = std::clamp(gx - x0, 0.0, 1.0);
                const double v00 = cell_results[size_t(y0) * gc + x0].at(y, x);
                const double v01 = cell_results[size_t(y0) * gc + x1].at(y, x);
                const double v10 = cell_results[size_t(y1) * gc + x0].at(y, x);
                const double v11 = cell_results[size_t(y1) * gc + x1].at(y, x);
                dst[size_t(y) * cols + x] = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                                            wy * ((1 - wx) * v10 + wx * v11);
            }
        }
    }

    add_noise(out, noise);
    return out;
}

// ---------------------------------------------------------------------------
// Companding

namespace {
// Piecewise power law: linear toe below the knee, exponent 2.4 above,
// continuous at the knee; fixes 0 -> 0 and 1 -> 1 exactly.
constexpr double kToeSlope = 12.92;
constexpr double kKnee = 0.0031308;
constexpr double kOffset = 0.055;
constexpr double kExponent = 2.4;
} // namespace

double compand_value(double v, CompandDirection dir) {
    if (v < 0.0 || v > 1.0) throw ImagingError("compand input outside [0, 1]");
    if (dir == CompandDirection::Compress) {
        if (v <= kKnee) return kToeSlope * v;
        return (1.0 + kOffset) * std::pow(v, 1.0 / kExponent) - kOffset;
    }
    const double knee_c = kToeSlope * kKnee;
    if (v <= knee_c) return v / kToeSlope;
    return std::pow((v + kOffset) / (1.0 + kOffset), kExponent);
}

Image compand(const Image& img, CompandDirection dir) {
    Image out = img;
    for (double& v : out.data) v = compand_value(v, dir);
    return out;
}

} // namespace proxycam
