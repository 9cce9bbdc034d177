#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pixinla/gmrf.hpp"
#include "pixinla/likelihood.hpp"
#include "pixinla/sparse.hpp"

namespace pixinla {

struct NewtonOptions {
    double grad_tol = 1e-8;       ///< infinity norm of the (projected) gradient
    double obj_rel_tol = 1e-12;   ///< relative objective change
    int max_iterations = 100;
    int max_halvings = 40;        ///< backtracking halvings per step
    double floor = 1e-8;          ///< hard positivity floor on positive domains
    bool compute_variances = true;
};

/// Gaussian approximation of p(x | theta, y) at the mode of the full
/// conditional: N(mode, (Q + C)^{-1}) with C = diag(-h_i) evaluated at the
/// mode. Immutable once returned.
struct GaussianApprox {
    std::vector<double> mode;
    SparseSymMatrix approx_precision;  // Q + C
    CholFactor factor;                 // of approx_precision
    std::vector<double> cond_variances;  // (Q+C)^{-1} diagonal; empty if skipped
    double log_density_at_mode = 0.0;  // ln N(mode | mode, (Q+C)^{-1})
    double objective = 0.0;            // ln p(mode|theta) + ln p(y|mode) up to prior consts
    std::vector<std::uint8_t> clamped;  // pixels pinned at the positivity floor
    std::vector<double> objective_trace;  // accepted iterates, non-decreasing
    int iterations = 0;
};

/// Safeguarded (damped, positivity-clamped) Newton ascent of
/// ln p(x | theta) + ln p(y | x) for an arbitrary observation model.
GaussianApprox fit_laplace(const SparseSymMatrix& Q, const ObsModel& obs,
                           std::span<const double> x0, const NewtonOptions& opts = {});

/// Poisson-observation entry point on the ICAR lattice prior; x0 defaults to
/// max(y_i, 0.5) per pixel.
GaussianApprox gaussian_approx(const GridGraph& g, const IcarHyper& h, const CountField& y,
                               const std::optional<std::vector<double>>& x0 = std::nullopt,
                               const NewtonOptions& opts = {});

/// The theta-dependent part of ln ptilde(theta | y), excluding the hyperprior:
///   ln p(x* | theta) + ln p(y | x*) - ln ptilde_G(x* | theta, y).
double conditional_log_marginal_correction(const GaussianApprox& ga, const GridGraph& g,
                                           const IcarHyper& h, const ObsModel& obs);

/// Same with the prior normalizer supplied directly (engine-internal path).
double conditional_log_marginal_correction(const GaussianApprox& ga, double prior_logdet,
                                           const SparseSymMatrix& Q, const ObsModel& obs);

}  // namespace pixinla
