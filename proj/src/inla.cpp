#include "pixinla/inla.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

#include "parallel.hpp"
#include "pixinla/errors.hpp"

namespace pixinla {

namespace {

Vec2 mat_vec(const Mat2& m, const Vec2& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

Mat2 inverse2(const Mat2& m) {
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det == 0.0) throw IndefiniteHessian("singular 2x2 matrix");
    const double inv = 1.0 / det;
    return {{{m[1][1] * inv, -m[0][1] * inv}, {-m[1][0] * inv, m[0][0] * inv}}};
}

// Eigen-decomposition of a symmetric 2x2: returns eigenvalues (ascending)
// and the rotation whose columns are the eigenvectors.
void sym_eig2(const Mat2& m, Vec2& eigvals, Mat2& eigvecs) {
    const double a = m[0][0], b = 0.5 * (m[0][1] + m[1][0]), c = m[1][1];
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
    eigvals = {0.5 * tr - disc, 0.5 * tr + disc};
    if (std::fabs(b) < 1e-300) {
        if (a <= c) {
            eigvecs = {{{1.0, 0.0}, {0.0, 1.0}}};
        } else {
            eigvecs = {{{0.0, 1.0}, {1.0, 0.0}}};
        }
        return;
    }
    // eigenvector for lambda: (b, lambda - a), normalized
    for (int k = 0; k < 2; ++k) {
        const double vx = b;
        const double vy = eigvals[k] - a;
        const double norm = std::hypot(vx, vy);
        eigvecs[0][k] = vx / norm;
        eigvecs[1][k] = vy / norm;
    }
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

Vec2 HyperMode::w_of_z(const Vec2& z) const {
    const Vec2 t = mat_vec(z_to_w, z);
    return {w_star[0] + t[0], w_star[1] + t[1]};
}

Vec2 HyperMode::theta_of_z(const Vec2& z) const {
    const Vec2 w = w_of_z(z);
    return {std::exp(w[0]), std::exp(w[1])};
}

Vec2 HyperMode::z_of_theta(const Vec2& theta) const {
    const Vec2 dw = {std::log(theta[0]) - w_star[0], std::log(theta[1]) - w_star[1]};
    return mat_vec(w_to_z, dw);
}

double PosteriorMarginals::density(index_t i, double t) const {
    double acc = 0.0;
    for (std::size_t h = 0; h < point_count(); ++h) {
        const double v = var_at(h, i);
        const double r = t - mean_at(h, i);
        acc += weights[h] * std::exp(-0.5 * r * r / v) /
               std::sqrt(2.0 * std::numbers::pi * v);
    }
    return acc;
}

double PosteriorMarginals::cdf(index_t i, double t) const {
    double acc = 0.0;
    for (std::size_t h = 0; h < point_count(); ++h) {
        const double s = std::sqrt(2.0 * var_at(h, i));
        acc += weights[h] * 0.5 * std::erfc(-(t - mean_at(h, i)) / s);
    }
    return acc;
}

PosteriorMarginals integrate_marginals(const std::vector<HyperPoint>& points) {
    if (points.empty()) throw EmptyPointSet("no hyperparameter integration points");
    for (const auto& p : points) {
        if (!std::isfinite(p.log_post))
            throw InvalidConfig("integration point with non-finite log posterior");
        if (!(p.weight > 0.0)) throw InvalidConfig("integration point weight must be > 0");
        if (!p.approx || p.approx->cond_variances.empty())
            throw InvalidConfig("integration points must carry conditional variances");
    }
    const index_t n = static_cast<index_t>(points.front().approx->mode.size());
    const std::size_t H = points.size();

    PosteriorMarginals out;
    out.n = n;
    out.weights.resize(H);
    out.thetas.resize(H);
    out.log_posts.resize(H);
    out.means.resize(H * n);
    out.variances.resize(H * n);

    double max_lp = points.front().log_post;
    for (const auto& p : points) max_lp = std::max(max_lp, p.log_post);
    double total = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
        out.weights[h] = std::exp(points[h].log_post - max_lp) * points[h].weight;
        out.thetas[h] = points[h].theta;
        out.log_posts[h] = points[h].log_post;
        total += out.weights[h];
    }
    for (double& w : out.weights) w /= total;

    for (std::size_t h = 0; h < H; ++h) {
        const auto& ga = *points[h].approx;
        if (static_cast<index_t>(ga.mode.size()) != n)
            throw DimensionMismatch("integration points disagree on field size");
        std::copy(ga.mode.begin(), ga.mode.end(), out.means.begin() + h * n);
        std::copy(ga.cond_variances.begin(), ga.cond_variances.end(),
                  out.variances.begin() + h * n);
    }

    out.eap.assign(n, 0.0);
    out.variance.assign(n, 0.0);
    for (std::size_t h = 0; h < H; ++h)
        for (index_t i = 0; i < n; ++i) out.eap[i] += out.weights[h] * out.mean_at(h, i);
    // law of total variance, spread term in centered form so it stays >= 0
    for (std::size_t h = 0; h < H; ++h) {
        for (index_t i = 0; i < n; ++i) {
            const double dm = out.mean_at(h, i) - out.eap[i];
            out.variance[i] += out.weights[h] * (out.var_at(h, i) + dm * dm);
        }
    }
    return out;
}

std::vector<HyperPoint> explore_ccd_core(const PointEvaluator& eval, double f0,
                                         int workers) {
    if (!(f0 > 1.0)) throw InvalidConfig("CCD scale f0 must exceed 1");
    const double ax = f0 * std::numbers::sqrt2;  // axial offset
    const std::vector<Vec2> zs = {
        {0.0, 0.0},  {-f0, -f0}, {-f0, f0},  {f0, -f0}, {f0, f0},
        {-ax, 0.0},  {ax, 0.0},  {0.0, -ax}, {0.0, ax},
    };
    // Moment-matching weights: with 8 ring points at squared radius r^2 the
    // rule reproduces a standard Gaussian's mass and covariance exactly.
    const double r2 = 2.0 * f0 * f0;
    const double w_center = 2.0 * std::numbers::pi * (1.0 - 2.0 / r2);
    const double w_ring = std::numbers::pi * std::exp(0.5 * r2) / (2.0 * r2);

    std::vector<HyperPoint> points(zs.size());
    detail::parallel_for(zs.size(), workers, [&](std::size_t k) {
        points[k] = eval(zs[k], k == 0 ? w_center : w_ring);
    });
    return points;
}

std::vector<HyperPoint> explore_grid_core(const PointEvaluator& eval, double delta_z,
                                          double delta_pi, std::size_t max_points,
                                          int workers) {
    if (!(delta_z > 0.0) || !(delta_pi > 0.0))
        throw InvalidConfig("grid exploration requires delta_z > 0 and delta_pi > 0");
    using Cell = std::pair<int, int>;
    const double w = delta_z * delta_z;

    std::map<Cell, HyperPoint> accepted;
    HyperPoint center = eval({0.0, 0.0}, w);
    const double threshold = center.log_post - delta_pi;
    accepted.emplace(Cell{0, 0}, std::move(center));

    std::map<Cell, char> seen;
    seen[{0, 0}] = 1;
    std::vector<Cell> frontier = {{0, 0}};
    while (!frontier.empty()) {
        std::vector<Cell> candidates;
        for (const auto& [ci, cj] : frontier) {
            for (const Cell& nb : {Cell{ci - 1, cj}, Cell{ci + 1, cj}, Cell{ci, cj - 1},
                                   Cell{ci, cj + 1}}) {
                if (!seen.contains(nb)) {
                    seen[nb] = 1;
                    candidates.push_back(nb);
                }
            }
        }
        std::sort(candidates.begin(), candidates.end());
        std::vector<HyperPoint> evals(candidates.size());
        detail::parallel_for(candidates.size(), workers, [&](std::size_t k) {
            const Vec2 z = {candidates[k].first * delta_z, candidates[k].second * delta_z};
            evals[k] = eval(z, w);
        });
        frontier.clear();
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (evals[k].log_post > threshold) {
                accepted.emplace(candidates[k], std::move(evals[k]));
                frontier.push_back(candidates[k]);
                if (accepted.size() > max_points)
                    throw ExplosionGuard(
                        "grid exploration exceeded " + std::to_string(max_points) +
                        " points; the hyperposterior is not concentrated");
            }
        }
    }

    std::vector<HyperPoint> out;
    out.reserve(accepted.size());
    // center first, then deterministic lattice order
    out.push_back(accepted.at({0, 0}));
    for (auto& [cell, p] : accepted)
        if (cell != Cell{0, 0}) out.push_back(std::move(p));
    return out;
}

InlaEngine::InlaEngine(GridGraph g, const ObsModel& obs, InlaConfig cfg)
    : g_(g), obs_(obs), cfg_(cfg) {
    if (static_cast<std::size_t>(g_.n()) != obs_.size())
        throw DimensionMismatch("grid size does not match observation count");
}

double InlaEngine::log_hyper_posterior(const Vec2& theta, const std::vector<double>* warm,
                                       std::vector<double>* mode_out) const {
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0))
        throw InvalidHyper("theta components must be positive");
    const IcarHyper h(theta[0], theta[1]);
    const SparseSymMatrix Q = build_icar_precision(g_, h);
    NewtonOptions opts = cfg_.newton;
    opts.compute_variances = false;
    // exit on the gradient criterion only: the objective-change shortcut
    // leaves a path-dependent residue that finite-difference mode search
    // cannot tolerate
    opts.obj_rel_tol = 0.0;
    std::vector<double> x0;
    if (warm && warm->size() == obs_.size()) {
        x0 = *warm;
    } else {
        x0.resize(obs_.size());
        for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = obs_.initial_value(i);
    }
    const GaussianApprox ga = fit_laplace(Q, obs_, x0, opts);
    if (mode_out) *mode_out = ga.mode;
    // flat hyperprior on [0, inf) as density exp(w1 + w2) in log coordinates
    const double hyperprior = std::log(theta[0]) + std::log(theta[1]);
    return hyperprior + conditional_log_marginal_correction(ga, grid_logdet(g_, h), Q, obs_);
}

HyperPoint InlaEngine::evaluate_theta(const Vec2& theta, const Vec2& z, double weight,
                                      const std::vector<double>* warm) const {
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0))
        throw InvalidHyper("theta components must be positive");
    const IcarHyper h(theta[0], theta[1]);
    const SparseSymMatrix Q = build_icar_precision(g_, h);
    NewtonOptions opts = cfg_.newton;
    opts.compute_variances = true;
    std::vector<double> x0;
    if (warm && warm->size() == obs_.size()) {
        x0 = *warm;
    } else {
        x0.resize(obs_.size());
        for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = obs_.initial_value(i);
    }
    auto ga = std::make_shared<GaussianApprox>(fit_laplace(Q, obs_, x0, opts));
    const double hyperprior = std::log(theta[0]) + std::log(theta[1]);
    HyperPoint p;
    p.theta = theta;
    p.z = z;
    p.weight = weight;
    p.log_post = hyperprior +
                 conditional_log_marginal_correction(*ga, grid_logdet(g_, h), Q, obs_);
    p.approx = std::move(ga);
    return p;
}

HyperMode InlaEngine::find_mode(const Vec2& theta_init) const {
    if (!(theta_init[0] > 0.0) || !(theta_init[1] > 0.0))
        throw InvalidHyper("theta_init components must be positive");

    // sequential quasi-Newton in w = log theta, warm-starting each inner
    // Newton from the previous latent mode
    std::vector<double> warm;
    auto f = [&](const Vec2& w) {
        const Vec2 theta = {std::exp(w[0]), std::exp(w[1])};
        std::vector<double> mode;
        const double val = log_hyper_posterior(theta, warm.empty() ? nullptr : &warm, &mode);
        warm = std::move(mode);
        return val;
    };
    const double h = cfg_.fd_grad_step;
    auto grad = [&](const Vec2& w) {
        Vec2 g;
        for (int k = 0; k < 2; ++k) {
            Vec2 wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            g[k] = (f(wp) - f(wm)) / (2.0 * h);
        }
        return g;
    };

    Vec2 w = {std::log(theta_init[0]), std::log(theta_init[1])};
    double fw = f(w);
    Vec2 g = grad(w);
    Mat2 B = {{{1.0, 0.0}, {0.0, 1.0}}};  // inverse Hessian of -f

    bool converged = false;
    for (int iter = 0; iter < cfg_.mode_max_iterations; ++iter) {
        const double ginf = std::max(std::fabs(g[0]), std::fabs(g[1]));
        if (ginf <= cfg_.mode_grad_tol) {
            converged = true;
            break;
        }
        Vec2 p = mat_vec(B, g);  // ascent direction
        double pg = p[0] * g[0] + p[1] * g[1];
        if (!(pg > 0.0)) {  // reset on loss of positive definiteness
            B = {{{1.0, 0.0}, {0.0, 1.0}}};
            p = g;
            pg = g[0] * g[0] + g[1] * g[1];
        }
        const double pnorm = std::hypot(p[0], p[1]);
        if (pnorm > 2.0) {  // trust-region style cap against wild steps
            const double scale = 2.0 / pnorm;
            p = {p[0] * scale, p[1] * scale};
            pg *= scale;
        }
        double alpha = 1.0;
        double fnew = fw;
        Vec2 wnew = w;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            wnew = {w[0] + alpha * p[0], w[1] + alpha * p[1]};
            fnew = f(wnew);
            if (fnew >= fw + 1e-4 * alpha * pg) {
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) {
            // Finite-difference gradients bottom out near sqrt(noise * curvature);
            // a stalled line search with the gradient at that floor is the
            // numerical optimum, not a failure.
            if (ginf <= std::max(cfg_.mode_grad_tol, 1e-7 * (1.0 + std::fabs(fw)))) {
                converged = true;
                break;
            }
            throw NoConvergence("hyperparameter line search stalled at gradient norm " +
                                std::to_string(std::hypot(g[0], g[1])));
        }
        const Vec2 gnew = grad(wnew);
        // BFGS update on -f: s = step, yk = g - gnew
        const Vec2 s = {wnew[0] - w[0], wnew[1] - w[1]};
        const Vec2 yk = {g[0] - gnew[0], g[1] - gnew[1]};
        const double sy = s[0] * yk[0] + s[1] * yk[1];
        if (sy > 1e-12 * std::hypot(s[0], s[1]) * std::hypot(yk[0], yk[1])) {
            const double rho = 1.0 / sy;
            const Vec2 By = mat_vec(B, yk);
            const double yBy = yk[0] * By[0] + yk[1] * By[1];
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    B[a][b] += (1.0 + rho * yBy) * rho * s[a] * s[b] -
                               rho * (s[a] * By[b] + By[a] * s[b]);
                }
            }
        }
        w = wnew;
        fw = fnew;
        g = gnew;
    }
    if (!converged)
        throw NoConvergence("hyperparameter mode search exceeded " +
                            std::to_string(cfg_.mode_max_iterations) + " iterations");

    // finite-difference Hessian in log coordinates, symmetrized
    const double hh = cfg_.fd_hess_step;
    const double fcenter = f(w);
    Mat2 H;
    for (int k = 0; k < 2; ++k) {
        Vec2 wp = w, wm = w;
        wp[k] += hh;
        wm[k] -= hh;
        H[k][k] = (f(wp) - 2.0 * fcenter + f(wm)) / (hh * hh);
    }
    {
        Vec2 wpp = w, wpm = w, wmp = w, wmm = w;
        wpp[0] += hh; wpp[1] += hh;
        wpm[0] += hh; wpm[1] -= hh;
        wmp[0] -= hh; wmp[1] += hh;
        wmm[0] -= hh; wmm[1] -= hh;
        const double cross = (f(wpp) - f(wpm) - f(wmp) + f(wmm)) / (4.0 * hh * hh);
        H[0][1] = cross;
        H[1][0] = cross;
    }

    Vec2 eigs;
    Mat2 vecs;
    sym_eig2(H, eigs, vecs);
    if (eigs[0] >= 0.0 || eigs[1] >= 0.0)
        throw IndefiniteHessian("hyperparameter Hessian has a non-negative eigenvalue (" +
                                std::to_string(eigs[0]) + ", " + std::to_string(eigs[1]) +
                                ") at the claimed mode");

    HyperMode mode;
    mode.w_star = w;
    mode.theta_star = {std::exp(w[0]), std::exp(w[1])};
    mode.hessian = H;
    // negative inverse Hessian = approximate posterior covariance of w
    const Mat2 S = inverse2({{{-H[0][0], -H[0][1]}, {-H[1][0], -H[1][1]}}});
    Vec2 seigs;
    Mat2 svecs;
    sym_eig2(S, seigs, svecs);
    for (int k = 0; k < 2; ++k) {
        const double scale = std::sqrt(seigs[k]);
        mode.z_to_w[0][k] = svecs[0][k] * scale;
        mode.z_to_w[1][k] = svecs[1][k] * scale;
        mode.w_to_z[k][0] = svecs[0][k] / scale;
        mode.w_to_z[k][1] = svecs[1][k] / scale;
    }
    return mode;
}

PointEvaluator InlaEngine::make_evaluator(
    const HyperMode& mode, std::shared_ptr<const std::vector<double>> warm) const {
    return [this, mode, warm = std::move(warm)](const Vec2& z, double weight) {
        return evaluate_theta(mode.theta_of_z(z), z, weight, warm ? warm.get() : nullptr);
    };
}

std::vector<HyperPoint> InlaEngine::explore_grid(const HyperMode& mode) const {
    auto center = std::make_shared<std::vector<double>>();
    log_hyper_posterior(mode.theta_star, nullptr, center.get());
    return explore_grid_core(make_evaluator(mode, center), cfg_.delta_z, cfg_.delta_pi,
                             cfg_.max_points, cfg_.workers);
}

std::vector<HyperPoint> InlaEngine::explore_ccd(const HyperMode& mode) const {
    auto center = std::make_shared<std::vector<double>>();
    log_hyper_posterior(mode.theta_star, nullptr, center.get());
    return explore_ccd_core(make_evaluator(mode, center), cfg_.f0, cfg_.workers);
}

InlaResult InlaEngine::run() const {
    InlaResult result;
    result.strategy = cfg_.strategy;
    const double t0 = now_seconds();

    if (cfg_.strategy == Strategy::fixed) {
        if (!cfg_.fixed_theta)
            throw InvalidConfig("fixed-theta strategy requires fixed_theta");
        result.points.push_back(evaluate_theta(*cfg_.fixed_theta, {0.0, 0.0}, 1.0));
    } else {
        const HyperMode mode = find_mode();
        result.mode = mode;
        result.timings.mode_seconds = now_seconds() - t0;
        const double t1 = now_seconds();
        result.points = cfg_.strategy == Strategy::grid ? explore_grid(mode)
                                                        : explore_ccd(mode);
        result.timings.explore_seconds = now_seconds() - t1;
    }

    const double t2 = now_seconds();
    result.marginals = integrate_marginals(result.points);
    result.timings.integrate_seconds = now_seconds() - t2;
    result.timings.total_seconds = now_seconds() - t0;
    return result;
}

double log_hyper_posterior(const Vec2& theta, const GridGraph& g, const CountField& y) {
    const PoissonObs obs(y);
    const InlaEngine engine(g, obs);
    return engine.log_hyper_posterior(theta);
}

HyperMode find_mode(const GridGraph& g, const CountField& y, const Vec2& theta_init) {
    const PoissonObs obs(y);
    InlaConfig cfg;
    cfg.theta_init = theta_init;
    const InlaEngine engine(g, obs, cfg);
    return engine.find_mode();
}

}  // namespace pixinla
