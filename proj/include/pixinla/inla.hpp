#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pixinla/laplace.hpp"

namespace pixinla {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

enum class Strategy { grid, ccd, fixed };

struct InlaConfig {
    Strategy strategy = Strategy::ccd;
    double delta_z = 1.0;    ///< grid walk step in z-space
    double delta_pi = 2.5;   ///< log-posterior drop that ends the grid walk
    double f0 = 1.4142135623730951;  ///< CCD scale; design sphere radius f0*sqrt(2)
    Vec2 theta_init = {1.0, 1.0};
    double mode_grad_tol = 1e-5;
    int mode_max_iterations = 200;
    double fd_grad_step = 1e-4;
    double fd_hess_step = 1e-3;
    int workers = 0;  ///< parallel theta evaluations; 0 = hardware concurrency
    std::size_t max_points = 10000;
    NewtonOptions newton;
    /// Single-point (empirical Bayes) debug shortcut; required for
    /// Strategy::fixed and ignored otherwise.
    std::optional<Vec2> fixed_theta;
};

/// One hyperparameter integration point theta_h with its quadrature weight
/// and the Gaussian approximation computed there.
struct HyperPoint {
    Vec2 theta = {0.0, 0.0};  // (sigma2, d)
    Vec2 z = {0.0, 0.0};
    double log_post = 0.0;    // ln ptilde(theta_h | y), unnormalized
    double weight = 0.0;      // Delta_h > 0
    std::shared_ptr<const GaussianApprox> approx;
};

/// Mode of ln ptilde(theta | y) in log coordinates w = (ln sigma2, ln d),
/// with the z-standardization from the spectral factorization of the
/// negative inverse Hessian: w(z) = w* + V Lambda^{1/2} z.
struct HyperMode {
    Vec2 theta_star = {1.0, 1.0};
    Vec2 w_star = {0.0, 0.0};
    Mat2 hessian = {{{-1.0, 0.0}, {0.0, -1.0}}};  // negative definite at the mode
    Mat2 z_to_w = {{{1.0, 0.0}, {0.0, 1.0}}};
    Mat2 w_to_z = {{{1.0, 0.0}, {0.0, 1.0}}};

    Vec2 w_of_z(const Vec2& z) const;
    Vec2 theta_of_z(const Vec2& z) const;
    Vec2 z_of_theta(const Vec2& theta) const;
};

/// Per-pixel posterior marginals as a weighted Gaussian mixture over the
/// integration points, plus EAP and total-variance summaries.
struct PosteriorMarginals {
    index_t n = 0;
    std::vector<double> weights;  // normalized, sums to 1
    std::vector<Vec2> thetas;
    std::vector<double> log_posts;
    std::vector<double> means;      // point-major, size H*n
    std::vector<double> variances;  // point-major, size H*n
    std::vector<double> eap;        // size n
    std::vector<double> variance;   // size n, law of total variance

    std::size_t point_count() const { return weights.size(); }
    double mean_at(std::size_t h, index_t i) const { return means[h * n + i]; }
    double var_at(std::size_t h, index_t i) const { return variances[h * n + i]; }
    /// Mixture density / CDF of pixel i at abscissa t.
    double density(index_t i, double t) const;
    double cdf(index_t i, double t) const;
};

/// Normalize w_h proportional to exp(log_post_h - max) * Delta_h and mix the
/// per-point Gaussian marginals. Every point must carry conditional variances.
PosteriorMarginals integrate_marginals(const std::vector<HyperPoint>& points);

/// Evaluates one integration point at standardized coordinates z with the
/// given quadrature weight. Implementations must be thread-safe.
using PointEvaluator = std::function<HyperPoint(const Vec2& z, double weight)>;

/// Grid strategy: breadth-first walk of the z-lattice (step delta_z) keeping
/// points with log_post strictly above center - delta_pi; weights delta_z^2.
/// Throws ExplosionGuard past max_points accepted points.
std::vector<HyperPoint> explore_grid_core(const PointEvaluator& eval, double delta_z,
                                          double delta_pi, std::size_t max_points,
                                          int workers);

/// CCD strategy: center, four factorial corners (+-f0, +-f0) and four axial
/// points (+-f0*sqrt(2), 0), (0, +-f0*sqrt(2)), all on the sphere of radius
/// f0*sqrt(2). Weights integrate a standard Gaussian's 0th and 2nd moments
/// exactly; f0 > 1 keeps the center weight positive.
std::vector<HyperPoint> explore_ccd_core(const PointEvaluator& eval, double f0,
                                         int workers);

struct InlaTimings {
    double mode_seconds = 0.0;
    double explore_seconds = 0.0;
    double integrate_seconds = 0.0;
    double total_seconds = 0.0;
};

struct InlaResult {
    std::optional<HyperMode> mode;
    std::vector<HyperPoint> points;
    PosteriorMarginals marginals;
    InlaTimings timings;
    Strategy strategy = Strategy::ccd;
};

/// Orchestrates the full INLA pass for one observation model on the ICAR
/// lattice prior. Evaluations at distinct theta run on a bounded worker pool
/// with results assembled by point index, so runs are deterministic.
class InlaEngine {
public:
    InlaEngine(GridGraph g, const ObsModel& obs, InlaConfig cfg = {});

    /// ln ptilde(theta | y) in log-theta coordinates: hyperprior Jacobian
    /// (ln sigma2 + ln d, flat prior on the original scale) plus the Laplace
    /// correction. Optionally warm-starts the inner Newton from `warm`.
    double log_hyper_posterior(const Vec2& theta,
                               const std::vector<double>* warm = nullptr,
                               std::vector<double>* mode_out = nullptr) const;

    /// Quasi-Newton search in log-theta with central finite differences.
    HyperMode find_mode(const Vec2& theta_init) const;
    HyperMode find_mode() const { return find_mode(cfg_.theta_init); }

    /// Full evaluation (approximation with variances) at arbitrary theta.
    HyperPoint evaluate_theta(const Vec2& theta, const Vec2& z, double weight,
                              const std::vector<double>* warm = nullptr) const;

    std::vector<HyperPoint> explore_grid(const HyperMode& mode) const;
    std::vector<HyperPoint> explore_ccd(const HyperMode& mode) const;

    InlaResult run() const;

    const InlaConfig& config() const { return cfg_; }

private:
    PointEvaluator make_evaluator(const HyperMode& mode,
                                  std::shared_ptr<const std::vector<double>> warm) const;

    GridGraph g_;
    const ObsModel& obs_;
    InlaConfig cfg_;
};

/// Spec-shaped conveniences for the Poisson model.
double log_hyper_posterior(const Vec2& theta, const GridGraph& g, const CountField& y);
HyperMode find_mode(const GridGraph& g, const CountField& y,
                    const Vec2& theta_init = {1.0, 1.0});

}  // namespace pixinla
