#include "proxycam/lens_system.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace proxycam {

void SensorModel::validate() const {
    if (pixel_pitch_um <= 0.0) throw std::invalid_argument("pixel_pitch_um must be positive");
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("sensor resolution must be positive");
    if (wavelengths_um.empty()) throw std::invalid_argument("wavelength list must not be empty");
    for (double w : wavelengths_um)
        if (w <= 0.0) throw std::invalid_argument("wavelengths must be positive");
    if (channels.empty()) throw std::invalid_argument("at least one spectral channel required");
    for (const auto& ch : channels) {
        if (ch.response.size() != wavelengths_um.size())
            throw std::invalid_argument("channel response length must match the wavelength list");
        double sum = 0.0;
        for (double r : ch.response) {
            if (r < 0.0) throw std::invalid_argument("channel response weights must be >= 0");
            sum += r;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("channel response must be normalized to sum 1");
    }
}

void LensSystem::validate() const {
    if (surfaces.empty()) throw std::invalid_argument("system needs at least one surface");
    if (stop_index < 0 || stop_index >= int(surfaces.size()))
        throw std::invalid_argument("stop_index out of range");
    for (const auto& s : surfaces) s.validate();
    if (surfaces.back().thickness < 0.0)
        throw std::invalid_argument("sensor plane must lie after the last surface");
    sensor.validate();
}

double LensSystem::index_before(int i, double lambda_um) const {
    if (i <= 0) return 1.0;
    return surfaces[i - 1].material.index(lambda_um);
}

namespace {

// 2x2 paraxial system matrix acting on (y, u).
struct ParaxMat {
    double a = 1, b = 0, c = 0, d = 1;
    ParaxMat operator*(const ParaxMat& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
};

ParaxMat refraction_matrix(double curvature, double n_in, double n_out) {
    const double power = curvature * (n_out - n_in);
    return {1.0, 0.0, -power / n_out, n_in / n_out};
}

ParaxMat transfer_matrix(double t) { return {1.0, t, 0.0, 1.0}; }

} // namespace

ParaxialData LensSystem::paraxial(double lambda_um) const {
    ParaxialData out;
    const int n_surf = int(surfaces.size());

    // First vertex plane -> just after the last surface.
    ParaxMat full;
    ParaxMat to_stop;     // first vertex plane -> stop plane (before its refraction)
    ParaxMat after_stop;  // just after the stop refraction -> sensor plane
    bool past_stop = false;

    double n_in = 1.0;
    for (int i = 0; i < n_surf; ++i) {
        if (i == stop_index) {
            to_stop = full;
            past_stop = true;
            after_stop = ParaxMat{};
        }
        const double n_out = surfaces[i].material.index(lambda_um);
        const ParaxMat r = refraction_matrix(surfaces[i].curvature, n_in, n_out);
        full = r * full;
        if (past_stop) after_stop = r * after_stop;
        const ParaxMat t = transfer_matrix(surfaces[i].thickness);
        if (i < n_surf - 1) {
            full = t * full;
            if (past_stop) after_stop = t * after_stop;
        } else {
            // last gap reaches the sensor
            after_stop = t * (past_stop ? after_stop : ParaxMat{});
        }
        n_in = n_out;
    }

    // Parallel input ray (y=1, u=0): exit slope gives the focal length.
    const double y_exit = full.a;
    const double u_exit = full.c;
    if (u_exit != 0.0) {
        out.efl = -1.0 / u_exit;
        out.back_focal_distance = -y_exit / u_exit;
    } else {
        out.efl = std::numeric_limits<double>::infinity();
        out.back_focal_distance = std::numeric_limits<double>::infinity();
    }

    const double stop_radius = surfaces[stop_index].semi_aperture;

    // Entrance pupil: rays through the stop center (y_stop = 0) cross the
    // axis at z = B/A in front of the first vertex.
    if (stop_index == 0) {
        out.entrance_pupil_z = 0.0;
        out.entrance_pupil_radius = stop_radius;
    } else {
        const double a = to_stop.a, b = to_stop.b;
        out.entrance_pupil_z = (a != 0.0) ? b / a : 0.0;
        out.entrance_pupil_radius = (a != 0.0) ? std::abs(stop_radius / a) : stop_radius;
    }

    // Exit pupil: image of the stop through the rear group, relative to the
    // sensor plane.
    {
        const double b = after_stop.b, d = after_stop.d;
        if (d != 0.0) {
            out.exit_pupil_z = -b / d;
            const double det = after_stop.a * after_stop.d - after_stop.b * after_stop.c;
            out.exit_pupil_radius = std::abs(stop_radius * det / d);
        } else {
            out.exit_pupil_z = -out.efl;
            out.exit_pupil_radius = stop_radius;
        }
    }
    return out;
}

} // namespace proxycam
