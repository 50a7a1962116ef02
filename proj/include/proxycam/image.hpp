#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxycam {

/// Planar float image: `channels` planes of rows x cols doubles.
/// Values are linear, full scale 1.0 unless stated otherwise.
struct Image {
    int rows = 0;
    int cols = 0;
    int channels = 1;
    double pitch_um = 0.0; ///< 0 when unknown
    std::vector<double> data;

    Image() = default;
    Image(int r, int c, int ch = 1, double fill = 0.0)
        : rows(r), cols(c), channels(ch), data(size_t(r) * c * ch, fill) {}

    double at(int r, int c, int ch = 0) const {
        return data[(size_t(ch) * rows + r) * cols + c];
    }
    double& at(int r, int c, int ch = 0) {
        return data[(size_t(ch) * rows + r) * cols + c];
    }
    size_t plane_size() const { return size_t(rows) * cols; }
    const double* plane(int ch) const { return data.data() + ch * plane_size(); }
    double* plane(int ch) { return data.data() + ch * plane_size(); }
    double sum() const;
};

/// Binary float-raster format "PCF8": little-endian, layout
///   magic 'P''C''F''8' | u32 version | u32 rows | u32 cols | u32 channels |
///   f64 pitch_um | rows*cols*channels f64 samples, plane then row major.
void write_float_raster(const std::string& path, const Image& img);
Image read_float_raster(const std::string& path);

/// 16-bit binary PGM preview (single plane, min..max stretched).
void write_pgm16_preview(const std::string& path, const Image& img, int channel = 0);

/// 8/16-bit PGM/PPM loader; values scaled to [0,1].
Image read_pnm(const std::string& path);

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace proxycam
