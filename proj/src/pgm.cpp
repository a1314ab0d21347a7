#include "mammo/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace mammo {

namespace {

[[noreturn]] void bad(const std::string& what) {
    throw ImageError(ImageError::Kind::MalformedPgm, what);
}

// Reads the next whitespace-delimited token, skipping '#' comment lines.
std::size_t next_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) bad("expected integer in header");
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 0xFFFFFFFFull) bad("header value out of range");
        ++pos;
    }
    return value;
}

} // namespace

PixelMatrix parse_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') bad("not a binary PGM (P5)");
    std::size_t pos = 2;
    const std::size_t cols = next_int(bytes, pos);
    const std::size_t rows = next_int(bytes, pos);
    const std::size_t maxval = next_int(bytes, pos);
    if (rows == 0 || cols == 0) bad("zero dimension");
    if (maxval == 0 || maxval > 65535) bad("maxval out of range");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) bad("missing raster separator");
    ++pos;  // single whitespace before the raster

    PixelMatrix m;
    m.rows = rows;
    m.columns = cols;
    m.bits_stored = maxval > 255 ? 16 : 8;
    m.values.resize(rows * cols);
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    if (bytes.size() - pos < rows * cols * bytes_per_sample) bad("truncated raster");
    for (std::size_t i = 0; i < rows * cols; ++i) {
        std::uint16_t v;
        if (bytes_per_sample == 2) {
            v = static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
            pos += 2;
        } else {
            v = bytes[pos++];
        }
        if (v > maxval) bad("sample exceeds maxval");
        m.values[i] = v;
    }
    return m;
}

PixelMatrix read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_pgm(bytes);
}

std::vector<std::uint8_t> encode_pgm(const PixelMatrix& m) {
    if (m.rows == 0 || m.columns == 0)
        throw ImageError(ImageError::Kind::EmptyImage, "cannot encode empty image");
    const std::uint32_t maxval = (1u << m.bits_stored) - 1;
    std::string header = "P5\n" + std::to_string(m.columns) + " " + std::to_string(m.rows) +
                         "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + m.values.size() * (maxval > 255 ? 2 : 1));
    for (std::uint16_t v : m.values) {
        if (maxval > 255) {
            out.push_back(static_cast<std::uint8_t>(v >> 8));
            out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        } else {
            out.push_back(static_cast<std::uint8_t>(v));
        }
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const PixelMatrix& m) {
    const std::vector<std::uint8_t> bytes = encode_pgm(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) bad("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

PixelMatrix to_pixels(const NormalizedImage& img, int bits_stored) {
    PixelMatrix m;
    m.rows = img.rows;
    m.columns = img.columns;
    m.bits_stored = bits_stored;
    m.values.resize(img.values.size());
    const double maxval = static_cast<double>((1u << bits_stored) - 1);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        m.values[i] = static_cast<std::uint16_t>(std::lround(img.values[i] * maxval));
    return m;
}

} // namespace mammo
