#include "pixinla/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pixinla/errors.hpp"

namespace pixinla {

namespace {

double objective_value(const SparseSymMatrix& Q, const ObsModel& obs,
                       std::span<const double> x) {
    return -0.5 * quad_form(Q, x) + obs.loglik(x);
}

}  // namespace

GaussianApprox fit_laplace(const SparseSymMatrix& Q, const ObsModel& obs,
                           std::span<const double> x0, const NewtonOptions& opts) {
    const std::size_t n = obs.size();
    if (static_cast<std::size_t>(Q.n) != n)
        throw DimensionMismatch("precision dimension does not match observation count");
    if (x0.size() != n) throw DimensionMismatch("initial field has wrong length");

    const bool positive = obs.positive_domain();
    std::vector<double> x(x0.begin(), x0.end());
    if (positive)
        for (double& v : x) v = std::max(v, opts.floor);

    std::vector<double> grad_lik(n), hess_lik(n), grad(n), c(n), trial(n);
    GaussianApprox out;
    out.objective_trace.reserve(16);

    double obj = objective_value(Q, obs, x);
    out.objective_trace.push_back(obj);

    std::vector<std::uint8_t> active(n, 0);
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        obs.grad_hess(x, grad_lik, hess_lik);
        const std::vector<double> qx = multiply(Q, x);
        double ginf = 0.0;
        bool any_active = false;
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] = grad_lik[i] - qx[i];
            c[i] = -hess_lik[i];
            const bool at_floor = positive && x[i] <= opts.floor * (1.0 + 1e-12);
            // a floor pixel pushed outward is stationary (projected gradient)
            active[i] = at_floor && grad[i] < 0.0 ? 1 : 0;
            any_active = any_active || active[i];
            if (!active[i]) ginf = std::max(ginf, std::fabs(grad[i]));
        }
        if (ginf <= opts.grad_tol) {
            converged = true;
            break;
        }

        // Newton on the free subspace: pixels held at the floor are decoupled
        // from the system so the step remains an ascent direction there.
        SparseSymMatrix H = Q.with_diagonal_added(c);
        if (any_active) {
            for (index_t j = 0; j < H.n; ++j) {
                for (index_t p = H.col_ptr[j] + 1; p < H.col_ptr[j + 1]; ++p)
                    if (active[H.row_idx[p]] || active[j]) H.values[p] = 0.0;
                if (active[j]) grad[j] = 0.0;
            }
        }
        const CholFactor hf = factorize(H);
        const std::vector<double> step = solve(hf, grad);

        double alpha = 1.0;
        bool accepted = false;
        double obj_new = obj;
        for (int halving = 0; halving <= opts.max_halvings; ++halving) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = x[i] + alpha * step[i];
                if (positive) trial[i] = std::max(trial[i], opts.floor);
            }
            const double candidate = objective_value(Q, obs, trial);
            if (std::isfinite(candidate) && candidate >= obj) {
                obj_new = candidate;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NoConvergence("Newton line search stalled with gradient norm " +
                                std::to_string(ginf));
        x.swap(trial);
        const double change = obj_new - obj;
        obj = obj_new;
        out.objective_trace.push_back(obj);
        if (change <= opts.obj_rel_tol * (1.0 + std::fabs(obj))) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged)
        throw NoConvergence("Newton mode search exceeded " +
                            std::to_string(opts.max_iterations) + " iterations");

    obs.grad_hess(x, grad_lik, hess_lik);
    for (std::size_t i = 0; i < n; ++i) c[i] = -hess_lik[i];
    out.mode = std::move(x);
    out.approx_precision = Q.with_diagonal_added(c);
    out.factor = factorize(out.approx_precision);
    out.log_density_at_mode =
        0.5 * out.factor.logdet -
        0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (opts.compute_variances)
        out.cond_variances = selected_inverse_diagonal(out.factor);
    out.objective = obj;
    out.iterations = iter;
    out.clamped.assign(n, 0);
    if (positive)
        for (std::size_t i = 0; i < n; ++i)
            out.clamped[i] = out.mode[i] <= opts.floor * (1.0 + 1e-12) ? 1 : 0;
    return out;
}

GaussianApprox gaussian_approx(const GridGraph& g, const IcarHyper& h, const CountField& y,
                               const std::optional<std::vector<double>>& x0,
                               const NewtonOptions& opts) {
    if (y.rows != g.rows || y.cols != g.cols)
        throw DimensionMismatch("count field does not match grid shape");
    const PoissonObs obs(y);
    const SparseSymMatrix Q = build_icar_precision(g, h);
    std::vector<double> start;
    if (x0) {
        start = *x0;
    } else {
        start.resize(obs.size());
        for (std::size_t i = 0; i < start.size(); ++i) start[i] = obs.initial_value(i);
    }
    return fit_laplace(Q, obs, start, opts);
}

double conditional_log_marginal_correction(const GaussianApprox& ga, double prior_logdet,
                                           const SparseSymMatrix& Q, const ObsModel& obs) {
    const double n = static_cast<double>(ga.mode.size());
    const double prior = -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * prior_logdet -
                         0.5 * quad_form(Q, ga.mode);
    return prior + obs.loglik(ga.mode) - ga.log_density_at_mode;
}

double conditional_log_marginal_correction(const GaussianApprox& ga, const GridGraph& g,
                                           const IcarHyper& h, const ObsModel& obs) {
    const SparseSymMatrix Q = build_icar_precision(g, h);
    return conditional_log_marginal_correction(ga, grid_logdet(g, h), Q, obs);
}

}  // namespace pixinla
