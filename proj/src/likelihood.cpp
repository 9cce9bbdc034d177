#include "pixinla/likelihood.hpp"

#include <cmath>
#include <numbers>

#include "pixinla/errors.hpp"

namespace pixinla {

namespace {

// ln y!: exact for y in {0, 1}, log-gamma above (overflow-free for large counts).
double log_factorial(std::int64_t y) {
    if (y < 2) return 0.0;
    return std::lgamma(static_cast<double>(y) + 1.0);
}

void check_lengths(std::size_t ny, std::size_t nx) {
    if (ny != nx) throw DimensionMismatch("count field and latent field lengths differ");
}

}  // namespace

void CountField::validate() const {
    if (rows < 1 || cols < 1 ||
        counts.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw DimensionMismatch("count field dimensions are inconsistent");
    for (const std::int64_t c : counts)
        if (c < 0) throw InvalidConfig("photon counts must be non-negative");
}

double poisson_loglik(const CountField& y, std::span<const double> x) {
    check_lengths(y.size(), x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0))
            throw NonPositiveRate("latent rate x[" + std::to_string(i) +
                                  "] = " + std::to_string(x[i]) + " is not positive");
        acc += static_cast<double>(y.counts[i]) * std::log(x[i]) - x[i] -
               log_factorial(y.counts[i]);
    }
    return acc;
}

void poisson_grad_hess(const CountField& y, std::span<const double> x,
                       std::span<double> grad, std::span<double> hess_diag) {
    check_lengths(y.size(), x.size());
    check_lengths(y.size(), grad.size());
    check_lengths(y.size(), hess_diag.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0))
            throw NonPositiveRate("latent rate x[" + std::to_string(i) +
                                  "] = " + std::to_string(x[i]) + " is not positive");
        const double yi = static_cast<double>(y.counts[i]);
        grad[i] = yi / x[i] - 1.0;
        hess_diag[i] = -yi / (x[i] * x[i]);
    }
}

double gaussian_loglik(std::span<const double> y, std::span<const double> x,
                       double obs_var) {
    if (!(obs_var > 0.0)) throw InvalidVariance("observation variance must be positive");
    check_lengths(y.size(), x.size());
    const double n = static_cast<double>(y.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - x[i];
        ss += r * r;
    }
    return -0.5 * n * std::log(2.0 * std::numbers::pi * obs_var) - 0.5 * ss / obs_var;
}

PoissonObs::PoissonObs(CountField y) : y_(std::move(y)) { y_.validate(); }

double PoissonObs::loglik(std::span<const double> x) const {
    return poisson_loglik(y_, x);
}

void PoissonObs::grad_hess(std::span<const double> x, std::span<double> grad,
                           std::span<double> hess_diag) const {
    poisson_grad_hess(y_, x, grad, hess_diag);
}

double PoissonObs::initial_value(std::size_t i) const {
    return std::max(static_cast<double>(y_.counts[i]), 0.5);
}

GaussianObs::GaussianObs(std::vector<double> y, double obs_var)
    : y_(std::move(y)), var_(obs_var) {
    if (!(var_ > 0.0)) throw InvalidVariance("observation variance must be positive");
}

double GaussianObs::loglik(std::span<const double> x) const {
    return gaussian_loglik(y_, x, var_);
}

void GaussianObs::grad_hess(std::span<const double> x, std::span<double> grad,
                            std::span<double> hess_diag) const {
    check_lengths(y_.size(), x.size());
    const double inv_v = 1.0 / var_;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        grad[i] = (y_[i] - x[i]) * inv_v;
        hess_diag[i] = -inv_v;
    }
}

}  // namespace pixinla
