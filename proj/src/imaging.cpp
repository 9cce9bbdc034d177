#include "pixinla/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "pixinla/errors.hpp"
#include "pixinla/rng.hpp"

namespace pixinla {

void ContrastParams::validate() const {
    if (!(lambda_min > 0.0) || !(lambda_min < lambda_max))
        throw InvalidHyper("contrast parameters require 0 < lambda_min < lambda_max");
}

double IntensityTransform::forward(double intensity) const {
    return (contrast.lambda_max - contrast.lambda_min) / (i_max - i_min) *
               (intensity - i_min) +
           contrast.lambda_min;
}

double IntensityTransform::inverse(double rate) const {
    return (rate - contrast.lambda_min) * (i_max - i_min) /
               (contrast.lambda_max - contrast.lambda_min) +
           i_min;
}

namespace {

class TokenReader {
public:
    explicit TokenReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // whitespace-delimited token; '#' starts a comment running to end of line
    std::string next_token() {
        skip_space_and_comments();
        std::string tok;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]))
            tok.push_back(static_cast<char>(bytes_[pos_++]));
        if (tok.empty()) throw MalformedHeader("unexpected end of PGM header");
        return tok;
    }

    long next_int(const char* what) {
        const std::string tok = next_token();
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw MalformedHeader(std::string("PGM header field '") + what +
                                  "' is not an integer: " + tok);
        }
    }

    // exactly one whitespace byte separates the header from binary samples
    void expect_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw MalformedHeader("missing separator before PGM raster data");
        ++pos_;
    }

    std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                return;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

PixelImage read_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2) throw MalformedHeader("input too short for a PGM header");
    const char m0 = static_cast<char>(bytes[0]);
    const char m1 = static_cast<char>(bytes[1]);
    if (m0 != 'P' || (m1 != '2' && m1 != '5'))
        throw UnsupportedMagic("expected PGM magic P2 or P5");
    const bool binary = m1 == '5';

    TokenReader reader(bytes.subspan(2));
    const long cols = reader.next_int("width");
    const long rows = reader.next_int("height");
    const long max_val = reader.next_int("max_val");
    if (cols < 1 || rows < 1) throw MalformedHeader("PGM dimensions must be positive");
    if (max_val < 1 || max_val > 65535)
        throw MalformedHeader("PGM max_val must lie in [1, 65535]");

    PixelImage img;
    img.rows = static_cast<std::int32_t>(rows);
    img.cols = static_cast<std::int32_t>(cols);
    img.max_val = static_cast<int>(max_val);
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    img.pixels.resize(n);

    if (binary) {
        reader.expect_single_space();
        const auto data = reader.rest();
        const bool wide = max_val > 255;
        const std::size_t need = n * (wide ? 2 : 1);
        if (data.size() < need)
            throw TruncatedData("PGM raster holds " + std::to_string(data.size()) +
                                " bytes, needs " + std::to_string(need));
        for (std::size_t i = 0; i < n; ++i) {
            long v;
            if (wide) {  // 16-bit samples are big-endian
                v = (static_cast<long>(data[2 * i]) << 8) | data[2 * i + 1];
            } else {
                v = data[i];
            }
            if (v > max_val) throw MalformedHeader("PGM sample exceeds max_val");
            img.pixels[i] = static_cast<double>(v);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            long v;
            try {
                v = reader.next_int("sample");
            } catch (const MalformedHeader&) {
                throw TruncatedData("PGM raster ended after " + std::to_string(i) +
                                    " of " + std::to_string(n) + " samples");
            }
            if (v < 0 || v > max_val)
                throw MalformedHeader("PGM sample out of range");
            img.pixels[i] = static_cast<double>(v);
        }
    }
    return img;
}

PixelImage read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_pgm(bytes);
}

std::vector<std::uint8_t> write_pgm(const PixelImage& img) {
    if (img.rows < 1 || img.cols < 1 ||
        img.pixels.size() !=
            static_cast<std::size_t>(img.rows) * static_cast<std::size_t>(img.cols))
        throw DimensionMismatch("image dimensions are inconsistent");
    std::string header = "P5\n" + std::to_string(img.cols) + " " +
                         std::to_string(img.rows) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.pixels.size());
    for (const double v : img.pixels) {
        const double clamped = std::clamp(v, 0.0, 255.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(clamped)));
    }
    return out;
}

void write_pgm_file(const std::filesystem::path& path, const PixelImage& img) {
    const std::vector<std::uint8_t> bytes = write_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

std::pair<std::vector<double>, IntensityTransform> intensity_forward(
    const PixelImage& img, const ContrastParams& c) {
    c.validate();
    if (img.pixels.empty()) throw DimensionMismatch("empty image");
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    if (!(*lo < *hi))
        throw ConstantImage("intensity transform requires a non-constant image");
    IntensityTransform t;
    t.i_min = *lo;
    t.i_max = *hi;
    t.contrast = c;
    std::vector<double> x(img.pixels.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = t.forward(img.pixels[i]);
    return {std::move(x), t};
}

PixelImage intensity_inverse(std::span<const double> x, const IntensityTransform& t,
                             std::int32_t rows, std::int32_t cols) {
    if (x.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw DimensionMismatch("field length does not match requested shape");
    PixelImage img;
    img.rows = rows;
    img.cols = cols;
    img.pixels.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) img.pixels[i] = t.inverse(x[i]);
    return img;
}

CountField corrupt_poisson(std::span<const double> x, std::int32_t rows,
                           std::int32_t cols, std::uint64_t seed) {
    if (x.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw DimensionMismatch("field length does not match requested shape");
    CountField y;
    y.rows = rows;
    y.cols = cols;
    y.counts.resize(x.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0))
            throw NonPositiveRate("Poisson rate x[" + std::to_string(i) +
                                  "] = " + std::to_string(x[i]) + " is not positive");
        y.counts[i] = static_cast<std::int64_t>(rng.poisson(x[i]));
    }
    return y;
}

PixelImage center_crop(const PixelImage& img, std::int32_t rows, std::int32_t cols) {
    if (rows < 1 || cols < 1 || rows > img.rows || cols > img.cols)
        throw DimensionMismatch("crop shape exceeds image shape");
    PixelImage out;
    out.rows = rows;
    out.cols = cols;
    out.max_val = img.max_val;
    out.pixels.resize(static_cast<std::size_t>(rows) * cols);
    const std::int32_t r0 = (img.rows - rows) / 2;
    const std::int32_t c0 = (img.cols - cols) / 2;
    for (std::int32_t r = 0; r < rows; ++r)
        for (std::int32_t c = 0; c < cols; ++c)
            out.pixels[static_cast<std::size_t>(r) * cols + c] =
                img.pixels[static_cast<std::size_t>(r + r0) * img.cols + (c + c0)];
    return out;
}

}  // namespace pixinla
