#include "proxycam/image.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace proxycam {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'F', '8'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& os, T v) {
    // Little-endian host assumed; documented in the format notes.
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

double Image::sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

void write_float_raster(const std::string& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ImageIoError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, kVersion);
    write_le<std::uint32_t>(os, std::uint32_t(img.rows));
    write_le<std::uint32_t>(os, std::uint32_t(img.cols));
    write_le<std::uint32_t>(os, std::uint32_t(img.channels));
    write_le<double>(os, img.pitch_um);
    os.write(reinterpret_cast<const char*>(img.data.data()),
             std::streamsize(img.data.size() * sizeof(double)));
    if (!os) throw ImageIoError("write failed: " + path);
}

Image read_float_raster(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageIoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ImageIoError("not a PCF8 raster: " + path);
    const auto version = read_le<std::uint32_t>(is);
    if (version != kVersion) throw ImageIoError("unsupported PCF8 version in " + path);
    Image img;
    img.rows = int(read_le<std::uint32_t>(is));
    img.cols = int(read_le<std::uint32_t>(is));
    img.channels = int(read_le<std::uint32_t>(is));
    img.pitch_um = read_le<double>(is);
    if (img.rows <= 0 || img.cols <= 0 || img.channels <= 0)
        throw ImageIoError("corrupt PCF8 header in " + path);
    img.data.resize(size_t(img.rows) * img.cols * img.channels);
    is.read(reinterpret_cast<char*>(img.data.data()),
            std::streamsize(img.data.size() * sizeof(double)));
    if (!is) throw ImageIoError("truncated PCF8 payload in " + path);
    return img;
}

void write_pgm16_preview(const std::string& path, const Image& img, int channel) {
    if (channel < 0 || channel >= img.channels) throw ImageIoError("preview channel out of range");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const double* p = img.plane(channel);
    for (size_t i = 0; i < img.plane_size(); ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
    }
    const double span = (hi > lo) ? hi - lo : 1.0;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw ImageIoError("cannot open for writing: " + path);
    os << "P5\n" << img.cols << " " << img.rows << "\n65535\n";
    for (size_t i = 0; i < img.plane_size(); ++i) {
        const double t = (p[i] - lo) / span;
        const auto v = std::uint16_t(t * 65535.0 + 0.5);
        const unsigned char bytes[2] = {(unsigned char)(v >> 8), (unsigned char)(v & 0xff)};
        os.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!os) throw ImageIoError("write failed: " + path);
}

namespace {

int pnm_token(std::ifstream& is) {
    // Skips whitespace and '#' comments.
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!isspace(c)) {
            break;
        }
        c = is.get();
    }
    int value = 0;
    bool any = false;
    while (c != EOF && isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = is.get();
    }
    if (!any) throw ImageIoError("malformed PNM header");
    return value;
}

} // namespace

Image read_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageIoError("cannot open: " + path);
    char p = 0, kind = 0;
    is.get(p);
    is.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6')) throw ImageIoError("unsupported PNM: " + path);
    const int channels = (kind == '6') ? 3 : 1;
    const int cols = pnm_token(is);
    const int rows = pnm_token(is);
    const int maxval = pnm_token(is);
    if (maxval <= 0 || maxval > 65535) throw ImageIoError("unsupported PNM maxval");

    Image img(rows, cols, channels);
    const size_t count = size_t(rows) * cols * channels;
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(count * bytes);
    is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!is) throw ImageIoError("truncated PNM payload in " + path);

    for (size_t i = 0; i < count; ++i) {
        const size_t pix = i / channels;
        const int ch = int(i % channels);
        const int r = int(pix / cols);
        const int c = int(pix % cols);
        const double v = (bytes == 2)
                             ? double((buf[2 * i] << 8) | buf[2 * i + 1])
                             : double(buf[i]);
        img.at(r, c, ch) = v / maxval;
    }
    return img;
}

} // namespace proxycam
