#include "proxycam/diffraction.hpp"

#include <cmath>
#include <numbers>

#include "proxycam/parallel.hpp"

namespace proxycam {

double obliquity_factor(const Vec3& d, const Vec3& r, const Vec3& n) {
    const double rn = r.norm();
    const double dn = d.norm();
    const double cos_nr = n.dot(r) / rn;
    const double cos_nd = n.dot(d) / dn;
    return 0.5 * (cos_nr - cos_nd);
}

PupilField pupil_from_trace(std::vector<TraceRecord>& records, const LensSystem& system,
                            double lambda_um) {
    const ParaxialData par = system.paraxial(lambda_um);
    const double pupil_z = par.exit_pupil_z;

    PupilField field;
    field.wavelength_um = lambda_um;
    field.plane_z = pupil_z;
    field.plane_normal = Vec3{0, 0, 1};

    for (auto& rec : records) {
        if (!rec.alive) continue;
        const Vec3& d = rec.sensor_direction;
        if (d.z == 0.0) continue;
        const double ds = pupil_z / d.z; // sensor plane sits at z = 0
        Vec3 p = rec.sensor_hit + d * ds;
        p.z = pupil_z;
        rec.pupil_point = p;
        field.points.push_back(p);
        field.path_lengths.push_back(rec.opl + ds); // image space index 1
        field.directions.push_back(-d);
    }
    if (field.points.empty())
        throw DiffractionError("no surviving rays to build the pupil field from");
    return field;
}

PsfGrid huygens_psf(const PupilField& field, const PsfWindow& window,
                    const std::vector<TraceRecord>* geometric_hits,
                    double max_outside_fraction) {
    if (field.points.empty()) throw DiffractionError("empty pupil field");
    if (window.samples <= 0 || window.pitch_um <= 0.0)
        throw DiffractionError("invalid PSF window");

    const int n = window.samples;
    const double pitch_mm = window.pitch_um * 1e-3;
    const double half_extent = 0.5 * n * pitch_mm;

    if (geometric_hits) {
        int alive = 0, outside = 0;
        for (const auto& rec : *geometric_hits) {
            if (!rec.alive) continue;
            ++alive;
            if (std::abs(rec.sensor_hit.x - window.center_x_mm) > half_extent ||
                std::abs(rec.sensor_hit.y - window.center_y_mm) > half_extent)
                ++outside;
        }
        if (alive > 0 && double(outside) / alive > max_outside_fraction)
            throw DiffractionError("PSF window too small: " + std::to_string(outside) + "/" +
                                   std::to_string(alive) + " geometric rays fall outside");
    }

    PsfGrid psf;
    psf.rows = n;
    psf.cols = n;
    psf.pitch_um = window.pitch_um;
    psf.center_x_mm = window.center_x_mm;
    psf.center_y_mm = window.center_y_mm;
    psf.wavelength_um = field.wavelength_um;
    psf.intensity.assign(size_t(n) * n, 0.0);

    const double k = 2.0 * std::numbers::pi / (field.wavelength_um * 1e-3);
    const size_t m = field.size();

    // Per-point constants.
    std::vector<double> cos_nd(m);
    for (size_t i = 0; i < m; ++i)
        cos_nd[i] = field.plane_normal.dot(field.directions[i]) / field.directions[i].norm();

    parallel_for(size_t(n), [&](size_t row) {
        const double y = psf.sample_y(int(row));
        for (int col = 0; col < n; ++col) {
            const double x = psf.sample_x(col);
            // Compensated accumulation keeps the sum independent of the
            // worker partition.
            double re = 0.0, re_c = 0.0, im = 0.0, im_c = 0.0;
            for (size_t i = 0; i < m; ++i) {
                const Vec3& p = field.points[i];
                const double dx = x - p.x;
                const double dy = y - p.y;
                const double dz = -p.z;
                const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                const double cos_nr =
                    (field.plane_normal.x * dx + field.plane_normal.y * dy +
                     field.plane_normal.z * dz) / r;
                const double obliquity = 0.5 * (cos_nr - cos_nd[i]);
                const double l = field.path_lengths[i];
                const double amp = field.amplitude * obliquity / (l * r);
                const double phase = k * (l + r);
                const double tre = amp * std::cos(phase);
                const double tim = amp * std::sin(phase);
                double t = re + tre;
                re_c += (std::abs(re) >= std::abs(tre)) ? (re - t) + tre : (tre - t) + re;
                re = t;
                t = im + tim;
                im_c += (std::abs(im) >= std::abs(tim)) ? (im - t) + tim : (tim - t) + im;
                im = t;
            }
            const double er = re + re_c;
            const double ei = im + im_c;
            psf.intensity[row * n + col] = er * er + ei * ei;
        }
    });

    double total = 0.0;
    for (double v : psf.intensity) total += v;
    if (!(total > 0.0)) throw DiffractionError("PSF has no energy");
    psf.raw_total = total;
    for (double& v : psf.intensity) v /= total;
    return psf;
}

PsfGrid polychromatic_psf(const std::vector<PsfGrid>& psfs,
                          const std::vector<double>& wavelengths_um,
                          const std::vector<double>& response) {
    if (psfs.empty()) throw DiffractionError("no PSFs to combine");
    if (psfs.size() != wavelengths_um.size() || psfs.size() != response.size())
        throw DiffractionError("wavelengths/response must match the PSF list");

    const PsfGrid& ref = psfs.front();
    for (const auto& p : psfs) {
        if (p.rows != ref.rows || p.cols != ref.cols ||
            std::abs(p.pitch_um - ref.pitch_um) > 1e-12 ||
            std::abs(p.center_x_mm - ref.center_x_mm) > 1e-9 ||
            std::abs(p.center_y_mm - ref.center_y_mm) > 1e-9)
            throw DiffractionError("PSF grids are not co-registered");
    }

    // Trapezoid weights over the sampled wavelengths.
    const size_t nw = psfs.size();
    std::vector<double> w(nw, 1.0);
    if (nw > 1) {
        for (size_t i = 0; i < nw; ++i) {
            const double lo = (i == 0) ? wavelengths_um[0] : wavelengths_um[i - 1];
            const double hi = (i == nw - 1) ? wavelengths_um[nw - 1] : wavelengths_um[i + 1];
            w[i] = 0.5 * (hi - lo);
            if (w[i] < 0.0) throw DiffractionError("wavelengths must be increasing");
        }
    }

    PsfGrid out = ref;
    out.wavelength_um = -1.0;
    out.intensity.assign(ref.intensity.size(), 0.0);
    out.raw_total = 0.0;
    for (size_t i = 0; i < nw; ++i) {
        const double weight = w[i] * response[i];
        for (size_t j = 0; j < out.intensity.size(); ++j)
            out.intensity[j] += weight * psfs[i].intensity[j];
    }
    double total = 0.0;
    for (double v : out.intensity) total += v;
    if (!(total > 0.0)) throw DiffractionError("polychromatic PSF has no energy");
    out.raw_total = total;
    for (double& v : out.intensity) v /= total;
    return out;
}

PupilField ideal_pupil_field(double radius_mm, double distance_mm, double lambda_um,
                             int samples_across) {
    PupilField field;
    field.wavelength_um = lambda_um;
    field.plane_z = -distance_mm;
    field.plane_normal = Vec3{0, 0, 1};

    const double reference = 2.0 * (distance_mm + radius_mm);
    const int n = samples_across;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            // Cell-centered grid: the effective aperture radius stays unbiased.
            const double u = (2.0 * ix + 1.0) / n - 1.0;
            const double v = (2.0 * iy + 1.0) / n - 1.0;
            if (u * u + v * v > 1.0) continue;
            const Vec3 p{u * radius_mm, v * radius_mm, -distance_mm};
            const double to_focus = p.norm(); // focus at the origin
            field.points.push_back(p);
            field.path_lengths.push_back(reference - to_focus);
            field.directions.push_back(p / to_focus);
        }
    }
    return field;
}

PsfGrid downsample_psf(const PsfGrid& psf, int factor) {
    if (factor <= 0 || psf.rows % factor || psf.cols % factor)
        throw DiffractionError("downsample factor must divide the PSF dimensions");
    PsfGrid out;
    out.rows = psf.rows / factor;
    out.cols = psf.cols / factor;
    out.pitch_um = psf.pitch_um * factor;
    out.center_x_mm = psf.center_x_mm;
    out.center_y_mm = psf.center_y_mm;
    out.fov_index = psf.fov_index;
    out.wavelength_um = psf.wavelength_um;
    out.raw_total = psf.raw_total;
    out.intensity.assign(size_t(out.rows) * out.cols, 0.0);
    for (int r = 0; r < psf.rows; ++r)
        for (int c = 0; c < psf.cols; ++c)
            out.at(r / factor, c / factor) += psf.at(r, c);
    return out;
}

} // namespace proxycam
