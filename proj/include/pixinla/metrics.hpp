#pragma once

#include <span>

namespace pixinla {

/// Image-similarity summary. psnr is +infinity exactly when mse is zero.
struct MetricReport {
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Mean squared pixel difference, population (1/n) convention.
double mse(std::span<const double> g, std::span<const double> h);

/// 10 log10(range^2 / mse) with the pooled dynamic range
/// max{G,H} - min{G,H} as the peak (not a fixed 255). Returns +infinity when
/// mse is zero; throws DegenerateRange when both images are jointly constant.
double psnr(std::span<const double> g, std::span<const double> h);

/// Global (non-windowed) structural similarity from pooled means, variances
/// and covariance, population (1/n) moments:
///   (2 mu_G mu_H + c1)(2 cov + c2) / ((mu_G^2 + mu_H^2 + c1)(var_G + var_H + c2)).
double ssim(std::span<const double> g, std::span<const double> h, double c1, double c2);

/// All three metrics with the conventional proportional stability constants
/// c1 = (0.01 R)^2, c2 = (0.03 R)^2 where R is the pooled dynamic range.
MetricReport compute_metrics(std::span<const double> g, std::span<const double> h);

}  // namespace pixinla
