#include "proxycam/sfr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace proxycam {

EdgeEstimate estimate_edge(const Image& patch, const SfrOptions& opt) {
    if (patch.rows < 8 || patch.cols < 16) throw SfrError("patch too small to hold an edge");
    const int rows = patch.rows, cols = patch.cols;

    // Global contrast gate so flat rows do not contribute.
    double lo = patch.at(0, 0), hi = lo;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            lo = std::min(lo, patch.at(y, x));
            hi = std::max(hi, patch.at(y, x));
        }
    const double contrast = hi - lo;
    if (contrast <= 0.0) throw SfrError("no edge found: flat patch");

    // Per-row crossing from the centroid of the absolute row derivative.
    std::vector<double> ys, xs;
    ys.reserve(rows);
    xs.reserve(rows);
    double polarity = 0.0;
    for (int y = 0; y < rows; ++y) {
        double wsum = 0.0, xsum = 0.0, peak = 0.0;
        for (int x = 1; x < cols - 1; ++x) {
            const double d = patch.at(y, x + 1) - patch.at(y, x - 1);
            const double a = std::abs(d);
            wsum += a;
            xsum += a * x;
            peak = std::max(peak, a);
            polarity += d;
        }
        if (peak < 0.2 * contrast || wsum <= 0.0) continue;
        ys.push_back(y);
        xs.push_back(xsum / wsum);
    }
    if (ys.size() < size_t(rows) / 2 || ys.size() < 4)
        throw SfrError("no edge found: too few rows with a transition");

    // Least-squares line x = a y + b.
    const size_t n = ys.size();
    double sy = 0, sx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sy += ys[i];
        sx += xs[i];
        syy += ys[i] * ys[i];
        sxy += ys[i] * xs[i];
    }
    const double denom = n * syy - sy * sy;
    if (denom == 0.0) throw SfrError("degenerate edge geometry");
    const double a = (n * sxy - sy * sx) / denom;
    const double b = (sx - a * sy) / n;

    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = xs[i] - (a * ys[i] + b);
        ss += r * r;
    }

    EdgeEstimate est;
    est.angle_deg = std::atan(a) * 180.0 / std::numbers::pi;
    est.offset_px = a * (0.5 * (rows - 1)) + b;
    est.fit_residual_px = std::sqrt(ss / n);
    est.dark_to_light = polarity >= 0.0;

    const double abs_angle = std::abs(est.angle_deg);
    if (abs_angle < opt.min_angle_deg || abs_angle > opt.max_angle_deg)
        throw SfrError("edge angle " + std::to_string(est.angle_deg) +
                       " deg outside the accepted band");
    return est;
}

EsfProfile build_esf(const Image& patch, const EdgeEstimate& edge, const SfrOptions& opt) {
    const int rows = patch.rows, cols = patch.cols;
    const double theta = edge.angle_deg * std::numbers::pi / 180.0;
    const double tan_t = std::tan(theta);
    const double cos_t = std::cos(theta);
    const double cy = 0.5 * (rows - 1);

    auto distance = [&](double x, double y) {
        return (x - edge.offset_px - (y - cy) * tan_t) * cos_t;
    };

    // Band of distances covered by every row, so the profile has no ragged ends.
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int y = 0; y < rows; ++y) {
        const double d0 = distance(0, y);
        const double d1 = distance(cols - 1, y);
        lo = std::max(lo, std::min(d0, d1));
        hi = std::min(hi, std::max(d0, d1));
    }
    const double width = kEsfBinWidth;
    const double margin = 1.0; // pixels, keeps partially covered rims out
    lo += margin;
    hi -= margin;
    const int bins = int(std::floor((hi - lo) / width));
    if (bins < 32) throw SfrError("edge too short: profile would have fewer than 32 bins");

    EsfProfile esf;
    esf.bin_width_px = width;
    esf.angle_deg = edge.angle_deg;
    esf.offset_px = edge.offset_px;
    esf.samples.assign(bins, 0.0);
    esf.bin_counts.assign(bins, 0);

    std::vector<double> nearest_dist;
    if (!opt.bin_average) nearest_dist.assign(bins, std::numeric_limits<double>::infinity());

    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            const double d = distance(x, y);
            const double pos = (d - lo) / width;
            if (pos < 0.0 || pos >= bins) continue;
            const int b = int(pos);
            const double v = edge.dark_to_light ? patch.at(y, x) : -patch.at(y, x);
            if (opt.bin_average) {
                esf.samples[b] += v;
                esf.bin_counts[b] += 1;
            } else {
                // Ablation path: keep only the sample closest to the bin center.
                const double center_err = std::abs(pos - b - 0.5);
                if (center_err < nearest_dist[b]) {
                    nearest_dist[b] = center_err;
                    esf.samples[b] = v;
                    esf.bin_counts[b] = 1;
                }
            }
        }
    }

    int empty = 0;
    for (int b = 0; b < bins; ++b) {
        if (esf.bin_counts[b] == 0) {
            ++empty;
        } else if (opt.bin_average) {
            esf.samples[b] /= esf.bin_counts[b];
        }
    }
    esf.empty_bins = empty;
    if (double(empty) / bins > opt.max_empty_bin_fraction)
        throw SfrError("edge too short: " + std::to_string(empty) + " of " +
                       std::to_string(bins) + " bins are empty");

    // Fill stray empty bins from their neighbors.
    for (int b = 0; b < bins; ++b) {
        if (esf.bin_counts[b] != 0) continue;
        int l = b - 1, r = b + 1;
        while (l >= 0 && esf.bin_counts[l] == 0) --l;
        while (r < bins && esf.bin_counts[r] == 0) ++r;
        if (l >= 0 && r < bins)
            esf.samples[b] = 0.5 * (esf.samples[l] + esf.samples[r]);
        else if (l >= 0)
            esf.samples[b] = esf.samples[l];
        else if (r < bins)
            esf.samples[b] = esf.samples[r];
    }
    return esf;
}

SfrCurve sfr_from_esf(const EsfProfile& esf, const SfrOptions& opt) {
    const int n = int(esf.samples.size());
    if (n < 8) throw SfrError("ESF too short");

    // Centered finite difference; the 1/(2 width) factor cancels in the
    // normalization.
    const int m = n - 2;
    std::vector<double> lsf(m);
    for (int i = 0; i < m; ++i) lsf[i] = 0.5 * (esf.samples[i + 2] - esf.samples[i]);

    int peak = 0;
    for (int i = 1; i < m; ++i)
        if (std::abs(lsf[i]) > std::abs(lsf[peak])) peak = i;

    if (opt.hamming_window) {
        const double half = std::max({peak, m - 1 - peak, 1});
        for (int i = 0; i < m; ++i) {
            const double u = (i - peak) / half;
            lsf[i] *= 0.54 + 0.46 * std::cos(std::numbers::pi * u);
        }
    }

    // DFT magnitude up to the sensor Nyquist (0.5 cy/px = 1/8 of the
    // quarter-pixel sampling rate).
    const int j_max = m / 8;
    if (j_max < 4) throw SfrError("profile too short for the frequency band");

    SfrCurve curve;
    curve.frequencies.reserve(j_max + 1);
    curve.response.reserve(j_max + 1);

    double dc = 0.0;
    for (int i = 0; i < m; ++i) dc += lsf[i];
    if (dc == 0.0) throw SfrError("zero DC: flat profile");

    for (int j = 0; j <= j_max; ++j) {
        double re = 0.0, im = 0.0;
        const double w = -2.0 * std::numbers::pi * j / m;
        for (int i = 0; i < m; ++i) {
            re += lsf[i] * std::cos(w * i);
            im += lsf[i] * std::sin(w * i);
        }
        const double f = double(j) / (m * esf.bin_width_px); // cycles/pixel
        double value = std::sqrt(re * re + im * im) / std::abs(dc);
        if (opt.derivative_correction && j > 0) {
            const double arg = 2.0 * std::numbers::pi * f * esf.bin_width_px;
            value /= std::sin(arg) / arg;
        }
        curve.frequencies.push_back(f);
        curve.response.push_back(value);
    }
    curve.response[0] = 1.0; // |DC|/|DC| exactly
    return curve;
}

Sfra sfr_area(const SfrCurve& curve) {
    Sfra out;
    double area = 0.0;
    for (size_t i = 1; i < curve.frequencies.size(); ++i) {
        double f0 = curve.frequencies[i - 1], f1 = curve.frequencies[i];
        double r0 = curve.response[i - 1], r1 = curve.response[i];
        if (f0 >= kNyquist) break;
        if (f1 > kNyquist) {
            const double t = (kNyquist - f0) / (f1 - f0);
            r1 = r0 + t * (r1 - r0);
            f1 = kNyquist;
        }
        area += 0.5 * (r0 + r1) * (f1 - f0);
    }
    out.value = area;
    return out;
}

std::vector<double> resample_sfr(const SfrCurve& curve, int samples) {
    std::vector<double> out(samples);
    const auto& f = curve.frequencies;
    const auto& r = curve.response;
    for (int i = 0; i < samples; ++i) {
        const double freq = kNyquist * i / (samples - 1);
        const auto it = std::upper_bound(f.begin(), f.end(), freq);
        if (it == f.begin()) {
            out[i] = r.front();
        } else if (it == f.end()) {
            out[i] = r.back();
        } else {
            const size_t hi = size_t(it - f.begin());
            const double t = (freq - f[hi - 1]) / (f[hi] - f[hi - 1]);
            out[i] = r[hi - 1] + t * (r[hi] - r[hi - 1]);
        }
    }
    return out;
}

SfrMeasurement measure_patch(const Image& patch, const SfrOptions& opt) {
    SfrMeasurement m;
    m.edge = estimate_edge(patch, opt);
    const EsfProfile esf = build_esf(patch, m.edge, opt);
    m.curve = sfr_from_esf(esf, opt);
    m.area = sfr_area(m.curve);

    double peak = 0.0;
    for (double v : m.curve.response) peak = std::max(peak, v);
    if (peak > 1.1)
        m.quality = "super_unity";
    else if (m.edge.fit_residual_px > 0.5)
        m.quality = "poor_fit";
    return m;
}

std::vector<GridCellMeasurement> measure_grid(const Image& image, int grid_rows, int grid_cols,
                                              const SfrOptions& opt) {
    if (grid_rows <= 0 || grid_cols <= 0) throw SfrError("grid must be positive");
    std::vector<GridCellMeasurement> out;
    out.reserve(size_t(grid_rows) * grid_cols);

    for (int gy = 0; gy < grid_rows; ++gy) {
        for (int gx = 0; gx < grid_cols; ++gx) {
            GridCellMeasurement cell;
            cell.fov_x = gx;
            cell.fov_y = gy;
            const int y0 = image.rows * gy / grid_rows;
            const int y1 = image.rows * (gy + 1) / grid_rows;
            const int x0 = image.cols * gx / grid_cols;
            const int x1 = image.cols * (gx + 1) / grid_cols;
            Image crop(y1 - y0, x1 - x0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) crop.at(y - y0, x - x0) = image.at(y, x);
            try {
                cell.measurement = measure_patch(crop, opt);
                cell.present = true;
            } catch (const SfrError&) {
                cell.present = false;
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

} // namespace proxycam
