#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pixinla/gmrf.hpp"
#include "pixinla/likelihood.hpp"

namespace pixinla {

/// Metropolis-adjusted Langevin chain on u = ln x (Jacobian included), so the
/// exact posterior restricted to x > 0 is the stationary law. Step size is
/// Robbins-Monro adapted toward 0.574 acceptance during burn-in only.
struct ChainConfig {
    std::int64_t steps = 2000;
    std::int64_t burn_in = 1000;
    double step_size = 0.25;  ///< initial Langevin step, adapted in burn-in
    std::uint64_t seed = 0;

    enum class ThetaMode { fixed, sample };
    ThetaMode theta_mode = ThetaMode::fixed;
    std::array<double, 2> theta = {1.0, 1.0};  ///< fixed value, or initial for sampling
    int theta_update_every = 10;  ///< latent sweeps between theta updates
    double theta_rw_step = 0.3;   ///< random-walk scale on (ln sigma2, ln d)
    /// Optional support box {lo1, hi1, lo2, hi2} on (ln sigma2, ln d); the flat
    /// hyperprior truncated to a box is proper.
    std::optional<std::array<double, 4>> theta_log_bounds;

    double target_accept = 0.574;
    int hist_bins = 64;
    /// Histogram support; defaults to [0, max(y) + 10 sqrt(max(y)+1) + 10].
    std::optional<std::array<double, 2>> hist_range;

    void validate() const;
};

struct ChainSummary {
    index_t rows = 0;
    index_t cols = 0;
    std::int64_t retained = 0;
    std::vector<double> mean;      // per pixel, retained samples
    std::vector<double> variance;  // per pixel, unbiased over retained samples
    std::vector<double> hist_edges;   // hist_bins + 1 shared edges
    std::vector<std::int64_t> hist_counts;  // pixel-major, size n * hist_bins
    double accept_rate = 0.0;        // post burn-in latent acceptance
    double theta_accept_rate = 0.0;  // post burn-in, sampling mode only
    std::array<double, 2> theta_mean = {0.0, 0.0};  // retained mean (sampling mode)
    double final_step_size = 0.0;
    ChainConfig config;

    std::int64_t hist_count(index_t pixel, int bin) const {
        return hist_counts[static_cast<std::size_t>(pixel) * hist_edges_count() + bin];
    }
    std::size_t hist_edges_count() const { return hist_edges.size() - 1; }
};

/// Exact-target sampler for p(x | y, theta) (or p(x, theta | y) in sampling
/// mode) on the ICAR lattice with the given observation model. Deterministic
/// per seed.
ChainSummary run_chain(const GridGraph& g, const ObsModel& obs, const ChainConfig& cfg);

/// Poisson-count convenience.
ChainSummary run_chain(const GridGraph& g, const CountField& y, const ChainConfig& cfg);

/// Per-pixel retained-sample mean.
std::vector<double> eap_from_chain(const ChainSummary& s);

}  // namespace pixinla
