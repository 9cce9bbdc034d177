#include "pixinla/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pixinla/errors.hpp"
#include "pixinla/rng.hpp"

namespace pixinla {

void ChainConfig::validate() const {
    if (steps < 1 || burn_in < 0 || burn_in >= steps)
        throw InvalidConfig("chain requires 0 <= burn_in < steps");
    if (!(step_size > 0.0)) throw InvalidConfig("step_size must be positive");
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0))
        throw InvalidConfig("theta components must be positive");
    if (theta_update_every < 1) throw InvalidConfig("theta_update_every must be >= 1");
    if (!(theta_rw_step > 0.0)) throw InvalidConfig("theta_rw_step must be positive");
    if (hist_bins < 1) throw InvalidConfig("hist_bins must be >= 1");
    if (hist_range && !(hist_range->at(0) < hist_range->at(1)))
        throw InvalidConfig("hist_range must be increasing");
    if (theta_log_bounds) {
        const auto& b = *theta_log_bounds;
        if (!(b[0] < b[1]) || !(b[2] < b[3]))
            throw InvalidConfig("theta_log_bounds must be increasing per coordinate");
    }
    if (!(target_accept > 0.0) || !(target_accept < 1.0))
        throw InvalidConfig("target_accept must lie in (0, 1)");
}

namespace {

struct TargetState {
    std::vector<double> x;     // latent rates
    std::vector<double> grad;  // gradient of the log target in chain coordinates
    double log_target = 0.0;
};

// Log target and gradient in chain coordinates u. Positive-domain models run
// on u = ln x with the Jacobian term; unrestricted models run on u = x.
bool evaluate_target(std::span<const double> u, const GridGraph& g, const IcarHyper& h,
                     const ObsModel& obs, bool log_space, TargetState& out) {
    const std::size_t n = u.size();
    out.x.resize(n);
    if (log_space) {
        for (std::size_t i = 0; i < n; ++i) {
            if (u[i] > 200.0) return false;  // exp would overflow downstream
            out.x[i] = std::exp(u[i]);
        }
    } else {
        out.x.assign(u.begin(), u.end());
    }
    std::vector<double> lik_grad(n), lik_hess(n);
    double loglik;
    try {
        loglik = obs.loglik(out.x);
        obs.grad_hess(out.x, lik_grad, lik_hess);
    } catch (const NonPositiveRate&) {
        return false;  // exp underflow to a zero rate; reject the proposal
    }
    const std::vector<double> qx = icar_multiply(out.x, g, h);
    double jac = 0.0;
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double gx = lik_grad[i] - qx[i];
        if (log_space) {
            out.grad[i] = gx * out.x[i] + 1.0;
            jac += u[i];
        } else {
            out.grad[i] = gx;
        }
    }
    out.log_target = prior_logpdf(out.x, g, h) + loglik + jac;
    return std::isfinite(out.log_target);
}

}  // namespace

ChainSummary run_chain(const GridGraph& g, const ObsModel& obs, const ChainConfig& cfg) {
    cfg.validate();
    const std::size_t n = obs.size();
    if (static_cast<std::size_t>(g.n()) != n)
        throw DimensionMismatch("grid size does not match observation count");

    const bool log_space = obs.positive_domain();
    const bool sample_theta = cfg.theta_mode == ChainConfig::ThetaMode::sample;

    Rng rng(cfg.seed);
    std::array<double, 2> w = {std::log(cfg.theta[0]), std::log(cfg.theta[1])};
    IcarHyper hyper(cfg.theta[0], cfg.theta[1]);

    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = obs.initial_value(i);
        u[i] = log_space ? std::log(std::max(v, 1e-3)) : v;
    }

    TargetState cur, prop;
    if (!evaluate_target(u, g, hyper, obs, log_space, cur))
        throw InvalidConfig("initial chain state has non-finite log target");

    // histogram support fixed before sampling
    ChainSummary s;
    s.rows = g.rows;
    s.cols = g.cols;
    s.config = cfg;
    double hist_lo = 0.0, hist_hi;
    if (cfg.hist_range) {
        hist_lo = cfg.hist_range->at(0);
        hist_hi = cfg.hist_range->at(1);
    } else {
        double top = 0.0;
        for (double v : cur.x) top = std::max(top, v);
        hist_hi = top + 10.0 * std::sqrt(top + 1.0) + 10.0;
    }
    s.hist_edges.resize(cfg.hist_bins + 1);
    for (int b = 0; b <= cfg.hist_bins; ++b)
        s.hist_edges[b] = hist_lo + (hist_hi - hist_lo) * b / cfg.hist_bins;
    s.hist_counts.assign(n * static_cast<std::size_t>(cfg.hist_bins), 0);

    std::vector<double> mean(n, 0.0), m2(n, 0.0);
    std::vector<double> u_prop(n), noise(n);
    double log_eps = std::log(cfg.step_size);
    std::int64_t accepted_tail = 0, proposals_tail = 0;
    std::int64_t theta_accepted = 0, theta_proposals = 0;
    std::int64_t retained = 0;
    std::array<double, 2> theta_sum = {0.0, 0.0};

    for (std::int64_t step = 0; step < cfg.steps; ++step) {
        const bool in_burn_in = step < cfg.burn_in;
        const double eps = std::exp(log_eps);
        const double half_eps2 = 0.5 * eps * eps;

        double noise_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            noise[i] = rng.normal();
            noise_sq += noise[i] * noise[i];
            u_prop[i] = u[i] + half_eps2 * cur.grad[i] + eps * noise[i];
        }
        double log_alpha = -std::numeric_limits<double>::infinity();
        if (evaluate_target(u_prop, g, hyper, obs, log_space, prop)) {
            // forward kernel density is -|noise|^2/2; reverse needs the
            // proposal-side drift
            double rev = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = u[i] - u_prop[i] - half_eps2 * prop.grad[i];
                rev += r * r;
            }
            log_alpha = prop.log_target - cur.log_target - rev / (2.0 * eps * eps) +
                        0.5 * noise_sq;
        }
        const double alpha = std::min(1.0, std::exp(std::min(0.0, log_alpha)));
        const bool accept = std::log(rng.uniform()) < log_alpha;
        if (accept) {
            u.swap(u_prop);
            std::swap(cur, prop);
        }
        if (!in_burn_in) {
            ++proposals_tail;
            if (accept) ++accepted_tail;
        } else {
            // Robbins-Monro on ln(eps), frozen after burn-in
            const double gain =
                1.0 / (cfg.target_accept * (1.0 - cfg.target_accept)) /
                std::pow(static_cast<double>(step + 10), 0.6);
            log_eps += std::clamp(gain * (alpha - cfg.target_accept), -0.25, 0.25);
        }

        if (sample_theta && (step + 1) % cfg.theta_update_every == 0) {
            ++theta_proposals;
            const std::array<double, 2> w_prop = {w[0] + cfg.theta_rw_step * rng.normal(),
                                                  w[1] + cfg.theta_rw_step * rng.normal()};
            bool inside = true;
            if (cfg.theta_log_bounds) {
                const auto& b = *cfg.theta_log_bounds;
                inside = w_prop[0] >= b[0] && w_prop[0] <= b[1] && w_prop[1] >= b[2] &&
                         w_prop[1] <= b[3];
            }
            if (inside) {
                const IcarHyper hyper_prop(std::exp(w_prop[0]), std::exp(w_prop[1]));
                // flat hyperprior on theta -> exp(w1 + w2) in log coordinates
                const double lt_prop =
                    w_prop[0] + w_prop[1] + prior_logpdf(cur.x, g, hyper_prop);
                const double lt_cur = w[0] + w[1] + prior_logpdf(cur.x, g, hyper);
                if (std::log(rng.uniform()) < lt_prop - lt_cur) {
                    w = w_prop;
                    hyper = hyper_prop;
                    ++theta_accepted;
                    // prior term of the log target changed
                    if (!evaluate_target(u, g, hyper, obs, log_space, cur))
                        throw NoConvergence("chain state became non-finite after theta update");
                }
            }
        }

        if (!in_burn_in) {
            ++retained;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = cur.x[i];
                const double delta = v - mean[i];
                mean[i] += delta / static_cast<double>(retained);
                m2[i] += delta * (v - mean[i]);
                int bin = static_cast<int>(std::floor((v - hist_lo) / (hist_hi - hist_lo) *
                                                      cfg.hist_bins));
                bin = std::clamp(bin, 0, cfg.hist_bins - 1);
                ++s.hist_counts[i * static_cast<std::size_t>(cfg.hist_bins) + bin];
            }
            theta_sum[0] += std::exp(w[0]);
            theta_sum[1] += std::exp(w[1]);
        }
    }

    s.retained = retained;
    s.mean = std::move(mean);
    s.variance.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.variance[i] = retained > 1 ? m2[i] / static_cast<double>(retained - 1) : 0.0;
    s.accept_rate = proposals_tail > 0
                        ? static_cast<double>(accepted_tail) / proposals_tail
                        : 0.0;
    s.theta_accept_rate =
        theta_proposals > 0 ? static_cast<double>(theta_accepted) / theta_proposals : 0.0;
    s.theta_mean = {theta_sum[0] / std::max<std::int64_t>(retained, 1),
                    theta_sum[1] / std::max<std::int64_t>(retained, 1)};
    s.final_step_size = std::exp(log_eps);
    return s;
}

ChainSummary run_chain(const GridGraph& g, const CountField& y, const ChainConfig& cfg) {
    const PoissonObs obs(y);
    return run_chain(g, obs, cfg);
}

std::vector<double> eap_from_chain(const ChainSummary& s) {
    if (s.retained < 1) throw InvalidConfig("chain summary has no retained samples");
    return s.mean;
}

}  // namespace pixinla
