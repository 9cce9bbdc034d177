#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pixinla/errors.hpp"
#include "pixinla/laplace.hpp"

using namespace pixinla;

TEST_SUITE("laplace") {

TEST_CASE("1x1 with one count: golden-ratio stationary point") {
    const GridGraph g{1, 1};
    const CountField y{1, 1, {1}};
    const GaussianApprox ga = gaussian_approx(g, IcarHyper(1.0, 1.0), y);
    const double mode = (std::sqrt(5.0) - 1.0) / 2.0;
    CHECK(ga.mode[0] == doctest::Approx(mode).epsilon(1e-9));
    CHECK(ga.approx_precision.diagonal(0) ==
          doctest::Approx(1.0 + 1.0 / (mode * mode)).epsilon(1e-8));
    CHECK(ga.cond_variances[0] == doctest::Approx(0.276393).epsilon(1e-5));
    CHECK(ga.clamped[0] == 0);
}

TEST_CASE("1x1 with zero counts clamps at the floor") {
    const GridGraph g{1, 1};
    const CountField y{1, 1, {0}};
    const GaussianApprox ga = gaussian_approx(g, IcarHyper(1.0, 1.0), y);
    CHECK(ga.mode[0] == doctest::Approx(1e-8).epsilon(1e-6));
    CHECK(ga.clamped[0] == 1);
}

TEST_CASE("4x4 all-ones field matches the dense projected-Newton oracle") {
    const GridGraph g{4, 4};
    const CountField y{4, 4, std::vector<std::int64_t>(16, 1)};
    const GaussianApprox ga = gaussian_approx(g, IcarHyper(1.0, 1.0), y);
    const Eigen::VectorXd dense =
        oracles::dense_poisson_mode(oracles::dense_icar(g, 1.0, 1.0), y.counts);
    for (index_t i = 0; i < g.n(); ++i)
        CHECK(ga.mode[i] == doctest::Approx(dense[i]).epsilon(1e-7));
}

TEST_CASE("gradient at the mode is small; objective trace is monotone") {
    const GridGraph g{5, 5};
    std::vector<std::int64_t> counts(25);
    std::mt19937 gen(9);
    std::uniform_int_distribution<std::int64_t> cd(0, 20);
    for (auto& c : counts) c = cd(gen);
    const CountField y{5, 5, counts};
    const IcarHyper h(1.0, 0.8);
    const GaussianApprox ga = gaussian_approx(g, h, y);

    const SparseSymMatrix Q = build_icar_precision(g, h);
    const auto qx = multiply(Q, ga.mode);
    std::vector<double> lg(25), lh(25);
    poisson_grad_hess(y, ga.mode, lg, lh);
    for (index_t i = 0; i < g.n(); ++i) {
        const double grad = lg[i] - qx[i];
        if (ga.clamped[i]) {
            CHECK(grad <= 0.0);  // projected stationarity at the floor
        } else {
            CHECK(std::fabs(grad) <= 1e-8);
        }
    }
    for (std::size_t k = 1; k < ga.objective_trace.size(); ++k)
        CHECK(ga.objective_trace[k] >= ga.objective_trace[k - 1]);
    // C is a nonnegative diagonal, so the approximation never loses precision
    for (index_t i = 0; i < g.n(); ++i)
        CHECK(ga.approx_precision.diagonal(i) >= Q.diagonal(i));
}

TEST_CASE("Gaussian observations make the approximation exact") {
    const GridGraph g{4, 4};
    const IcarHyper h(1.0, 0.7);
    const double obs_var = 0.9;
    std::mt19937 gen(31);
    std::normal_distribution<double> norm(3.0, 1.0);
    std::vector<double> data(16);
    for (auto& v : data) v = norm(gen);
    const GaussianObs obs(data, obs_var);
    const SparseSymMatrix Q = build_icar_precision(g, h);
    std::vector<double> x0(16);
    for (std::size_t i = 0; i < 16; ++i) x0[i] = obs.initial_value(i);
    const GaussianApprox ga = fit_laplace(Q, obs, x0);

    const Eigen::Map<const Eigen::VectorXd> yv(data.data(), 16);
    const oracles::GaussianPosterior post(oracles::to_dense(Q), yv, obs_var);
    for (index_t i = 0; i < 16; ++i) {
        CHECK(ga.mode[i] == doctest::Approx(post.mean[i]).epsilon(1e-10));
        CHECK(ga.cond_variances[i] ==
              doctest::Approx(post.covariance(i, i)).epsilon(1e-10));
    }
}

TEST_CASE("Gaussian correction equals the exact log evidence") {
    for (const auto& [rows, cols] : {std::pair{2, 3}, {4, 4}, {5, 5}}) {
        const GridGraph g{rows, cols};
        const IcarHyper h(1.2, 0.6);
        const double obs_var = 1.4;
        std::mt19937 gen(13 + rows);
        std::normal_distribution<double> norm(2.0, 1.5);
        std::vector<double> data(g.n());
        for (auto& v : data) v = norm(gen);
        const GaussianObs obs(data, obs_var);
        const SparseSymMatrix Q = build_icar_precision(g, h);
        std::vector<double> x0(data);
        const GaussianApprox ga = fit_laplace(Q, obs, x0);
        const double correction = conditional_log_marginal_correction(ga, g, h, obs);

        const Eigen::Map<const Eigen::VectorXd> yv(data.data(), g.n());
        const double evidence =
            oracles::gaussian_evidence(oracles::to_dense(Q), yv, obs_var);
        CHECK(correction == doctest::Approx(evidence).epsilon(1e-8));
    }
}

TEST_CASE("1x1 correction matches scalar quadrature") {
    const GridGraph g{1, 1};
    const CountField y{1, 1, {1}};
    const IcarHyper h(1.0, 1.0);
    const GaussianApprox ga = gaussian_approx(g, h, y);
    const PoissonObs obs(y);
    const double correction = conditional_log_marginal_correction(ga, g, h, obs);
    // frozen after the first verified run against the quadrature oracle
    CHECK(correction == doctest::Approx(-1.9331942100728776).epsilon(1e-9));
    const oracles::ScalarModel m{1, 1.0};
    // plain Laplace carries a skew bias of ~0.05 nats on this scalar model
    CHECK(std::fabs(correction - m.log_marginal()) < 0.06);
    // the correction excludes the hyperprior by construction: recomputing the
    // defining pieces reproduces it exactly
    const std::vector<double>& xs = ga.mode;
    const double recomputed =
        prior_logpdf(xs, g, h) + poisson_loglik(y, xs) - ga.log_density_at_mode;
    CHECK(correction == doctest::Approx(recomputed).epsilon(1e-14));
}

TEST_CASE("warm starts do not change the answer") {
    const GridGraph g{3, 3};
    const CountField y{3, 3, {2, 0, 5, 7, 1, 0, 3, 4, 9}};
    const IcarHyper h(1.5, 0.5);
    const GaussianApprox cold = gaussian_approx(g, h, y);
    const std::vector<double> start(9, 3.0);
    const GaussianApprox warm = gaussian_approx(g, h, y, start);
    for (index_t i = 0; i < 9; ++i)
        CHECK(cold.mode[i] == doctest::Approx(warm.mode[i]).epsilon(1e-9));
}

}  // TEST_SUITE
