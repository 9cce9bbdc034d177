#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pixinla {

/// Observed photon counts on the pixel lattice, row-major.
struct CountField {
    std::int32_t rows = 0;
    std::int32_t cols = 0;
    std::vector<std::int64_t> counts;

    std::size_t size() const { return counts.size(); }
    void validate() const;
};

/// ln p(y | x) = sum_i [ y_i ln x_i - x_i - ln y_i! ] on the identity link.
/// Requires x_i > 0 everywhere (rates are physically positive; the positive
/// orthant is the posterior support).
double poisson_loglik(const CountField& y, std::span<const double> x);

/// Per-pixel first and second derivatives of the Poisson log-likelihood:
///   g_i = y_i / x_i - 1,   h_i = -y_i / x_i^2   (h_i = 0 exactly when y_i = 0).
void poisson_grad_hess(const CountField& y, std::span<const double> x,
                       std::span<double> grad, std::span<double> hess_diag);

/// sum_i ln N(y_i | x_i, obs_var). Test-only observation model: with Gaussian
/// observations the Laplace approximation is exact, which turns the whole
/// pipeline into a closed-form oracle.
double gaussian_loglik(std::span<const double> y, std::span<const double> x,
                       double obs_var);

/// Observation model consumed by the Laplace and INLA engines. Instances own
/// their data; all members are pure given the latent field.
class ObsModel {
public:
    virtual ~ObsModel() = default;

    virtual std::size_t size() const = 0;

    /// ln p(y | x).
    virtual double loglik(std::span<const double> x) const = 0;

    /// Per-pixel gradient and Hessian diagonal of ln p(y | x) in x.
    virtual void grad_hess(std::span<const double> x, std::span<double> grad,
                           std::span<double> hess_diag) const = 0;

    /// Whether the latent field is restricted to the positive orthant.
    virtual bool positive_domain() const = 0;

    /// Default Newton starting value for pixel i.
    virtual double initial_value(std::size_t i) const = 0;
};

class PoissonObs final : public ObsModel {
public:
    explicit PoissonObs(CountField y);

    std::size_t size() const override { return y_.size(); }
    double loglik(std::span<const double> x) const override;
    void grad_hess(std::span<const double> x, std::span<double> grad,
                   std::span<double> hess_diag) const override;
    bool positive_domain() const override { return true; }
    // y_i is the per-pixel ML rate; the floor keeps y = 0 pixels interior.
    double initial_value(std::size_t i) const override;

    const CountField& counts() const { return y_; }

private:
    CountField y_;
};

/// Test-only Gaussian observations (exactness oracle for the Laplace step).
class GaussianObs final : public ObsModel {
public:
    GaussianObs(std::vector<double> y, double obs_var);

    std::size_t size() const override { return y_.size(); }
    double loglik(std::span<const double> x) const override;
    void grad_hess(std::span<const double> x, std::span<double> grad,
                   std::span<double> hess_diag) const override;
    bool positive_domain() const override { return false; }
    double initial_value(std::size_t i) const override { return y_[i]; }

    double obs_var() const { return var_; }
    std::span<const double> data() const { return y_; }

private:
    std::vector<double> y_;
    double var_;
};

}  // namespace pixinla
