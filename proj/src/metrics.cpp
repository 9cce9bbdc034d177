#include "pixinla/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pixinla/errors.hpp"

namespace pixinla {

namespace {

void check_pair(std::span<const double> g, std::span<const double> h) {
    if (g.size() != h.size() || g.empty())
        throw DimensionMismatch("images must be non-empty and equally sized");
}

double pooled_range(std::span<const double> g, std::span<const double> h) {
    double lo = g[0], hi = g[0];
    for (double v : g) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : h) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

}  // namespace

double mse(std::span<const double> g, std::span<const double> h) {
    check_pair(g, h);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = g[i] - h[i];
        acc += d * d;
    }
    return acc / static_cast<double>(g.size());
}

double psnr(std::span<const double> g, std::span<const double> h) {
    check_pair(g, h);
    const double range = pooled_range(g, h);
    if (!(range > 0.0))
        throw DegenerateRange("both images are constant; PSNR peak is undefined");
    const double err = mse(g, h);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(range * range / err);
}

double ssim(std::span<const double> g, std::span<const double> h, double c1, double c2) {
    check_pair(g, h);
    if (!(c1 > 0.0) || !(c2 > 0.0))
        throw InvalidConfig("SSIM stability constants must be positive");
    const double n = static_cast<double>(g.size());
    double mg = 0.0, mh = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mg += g[i];
        mh += h[i];
    }
    mg /= n;
    mh /= n;
    double vg = 0.0, vh = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double dg = g[i] - mg;
        const double dh = h[i] - mh;
        vg += dg * dg;
        vh += dh * dh;
        cov += dg * dh;
    }
    vg /= n;
    vh /= n;
    cov /= n;
    return (2.0 * mg * mh + c1) * (2.0 * cov + c2) /
           ((mg * mg + mh * mh + c1) * (vg + vh + c2));
}

MetricReport compute_metrics(std::span<const double> g, std::span<const double> h) {
    check_pair(g, h);
    const double range = pooled_range(g, h);
    if (!(range > 0.0))
        throw DegenerateRange("both images are constant; metrics are undefined");
    MetricReport r;
    r.c1 = 1e-4 * range * range;  // (0.01 R)^2
    r.c2 = 9e-4 * range * range;  // (0.03 R)^2
    r.mse = mse(g, h);
    r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity()
                          : 10.0 * std::log10(range * range / r.mse);
    r.ssim = ssim(g, h, r.c1, r.c2);
    return r;
}

}  // namespace pixinla
