#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pixinla/likelihood.hpp"

namespace pixinla {

/// Grayscale raster. Values are stored as doubles (any real range on input);
/// PGM emission clamps and rounds to 8 bits.
struct PixelImage {
    std::int32_t rows = 0;
    std::int32_t cols = 0;
    std::vector<double> pixels;  // row-major
    int max_val = 255;           // source PGM metadata

    std::size_t size() const { return pixels.size(); }
};

/// Target photon-rate bounds of the linear intensity transform.
struct ContrastParams {
    double lambda_min = 2.0;
    double lambda_max = 25.0;

    void validate() const;
};

/// Recorded source range so the transform can be inverted exactly later.
struct IntensityTransform {
    double i_min = 0.0;
    double i_max = 255.0;
    ContrastParams contrast;

    double forward(double intensity) const;
    double inverse(double rate) const;
};

/// Parse P2 (ASCII) or P5 (binary) PGM; max_val up to 65535, 16-bit samples
/// big-endian, '#' comments allowed in the header.
PixelImage read_pgm(std::span<const std::uint8_t> bytes);
PixelImage read_pgm_file(const std::filesystem::path& path);

/// Emit binary P5 with max_val 255 (values clamped and rounded).
std::vector<std::uint8_t> write_pgm(const PixelImage& img);
void write_pgm_file(const std::filesystem::path& path, const PixelImage& img);

/// x_i = (lambda_max - lambda_min) / (I_max - I_min) * (I_i - I_min) + lambda_min.
/// Throws ConstantImage when I_max = I_min.
std::pair<std::vector<double>, IntensityTransform> intensity_forward(
    const PixelImage& img, const ContrastParams& c);

/// Exact affine inverse; values may leave [I_min, I_max] (EAP overshoot) and
/// are only clamped when written as PGM.
PixelImage intensity_inverse(std::span<const double> x, const IntensityTransform& t,
                             std::int32_t rows, std::int32_t cols);

/// Independent Poisson(x_i) draws from the library generator; deterministic
/// per seed.
CountField corrupt_poisson(std::span<const double> x, std::int32_t rows,
                           std::int32_t cols, std::uint64_t seed);

/// Center crop to the requested shape.
PixelImage center_crop(const PixelImage& img, std::int32_t rows, std::int32_t cols);

}  // namespace pixinla
