// Acceptance suite: one pass/fail line per criterion, all tolerances pinned
// in code. Run with no arguments for the whole gate, or name criteria to run
// a subset. `--paper-image <pgm>` enables the advisory paper-scale check.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "pixinla/imaging.hpp"
#include "pixinla/inla.hpp"
#include "pixinla/mcmc.hpp"
#include "pixinla/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pixinla;

namespace {

struct Outcome {
    bool pass = true;
    bool skipped = false;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& note) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok: " : "FAIL: ") + note);
    }
    void note(const std::string& n) { notes.push_back(n); }
};

std::string g_paper_image;

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome linear_algebra_oracles() {
    Outcome out;
    const double t0 = now();
    const std::array<double, 5> hypers = {0.1, 0.31622776601683794, 1.0,
                                          3.1622776601683795, 10.0};
    double worst_logdet_dense = 0.0, worst_logdet_eigen = 0.0, worst_diag = 0.0;
    for (index_t side = 2; side <= 16; ++side) {
        const GridGraph g{side, side};
        for (const double s2 : hypers) {
            for (const double d : hypers) {
                const IcarHyper h(s2, d);
                const SparseSymMatrix Q = build_icar_precision(g, h);
                const CholFactor f = factorize(Q);
                const Eigen::MatrixXd dense = oracles::to_dense(Q);
                worst_logdet_dense = std::max(
                    worst_logdet_dense, std::fabs(log_det(f) - oracles::dense_logdet(dense)));
                worst_logdet_eigen =
                    std::max(worst_logdet_eigen, std::fabs(log_det(f) - grid_logdet(g, h)));
                const Eigen::MatrixXd inv = dense.inverse();
                const std::vector<double> diag = selected_inverse_diagonal(f);
                for (index_t i = 0; i < Q.n; ++i)
                    worst_diag = std::max(worst_diag, std::fabs(diag[i] - inv(i, i)));
            }
        }
    }
    const double elapsed = now() - t0;
    out.check(worst_logdet_dense <= 1e-9,
              "log-det vs dense Cholesky oracle: max err " + fmt(worst_logdet_dense));
    out.check(worst_logdet_eigen <= 1e-9,
              "log-det vs closed-form eigen-sum: max err " + fmt(worst_logdet_eigen));
    out.check(worst_diag <= 1e-8,
              "selected-inverse diagonal vs dense inverse: max err " + fmt(worst_diag));
    out.check(elapsed < 30.0, "runtime " + fmt(elapsed) + " s < 30 s");
    return out;
}

Outcome gaussian_exactness() {
    Outcome out;
    const double t0 = now();
    double worst_mean = 0.0, worst_var = 0.0;
    for (const index_t side : {4, 6, 8}) {
        const GridGraph g{side, side};
        std::mt19937 gen(100 + side);
        std::normal_distribution<double> norm(4.0, 1.3);
        std::vector<double> data(g.n());
        for (auto& v : data) v = norm(gen);
        for (const auto& [s2, d] : {std::pair{1.0, 0.7}, {2.5, 0.2}}) {
            const double obs_var = 0.8;
            const GaussianObs obs(data, obs_var);
            InlaConfig cfg;
            cfg.strategy = Strategy::fixed;
            cfg.fixed_theta = Vec2{s2, d};
            const InlaResult res = InlaEngine(g, obs, cfg).run();
            const Eigen::Map<const Eigen::VectorXd> yv(data.data(), g.n());
            const oracles::GaussianPosterior post(oracles::dense_icar(g, s2, d), yv,
                                                  obs_var);
            for (index_t i = 0; i < g.n(); ++i) {
                worst_mean = std::max(worst_mean,
                                      std::fabs(res.marginals.eap[i] - post.mean[i]));
                worst_var = std::max(worst_var, std::fabs(res.marginals.variance[i] -
                                                          post.covariance(i, i)));
            }
        }
    }
    const double elapsed = now() - t0;
    out.check(worst_mean <= 1e-8, "posterior means vs closed form: max err " + fmt(worst_mean));
    out.check(worst_var <= 1e-8,
              "posterior variances vs closed form: max err " + fmt(worst_var));
    out.check(elapsed < 10.0, "runtime " + fmt(elapsed) + " s < 10 s");
    return out;
}

// Scalar model on the bounded hyper box log-theta in [-2, 2]^2 (the flat
// hyperprior is improper on the full quadrant: the 1x1 likelihood sees only
// q = d / sigma2, so the posterior has an exact ridge along scaling).
struct ScalarBoxOracle {
    std::int64_t y;
    double box = 2.0;
    int panels = 80;  // per axis, Simpson

    // E[x | y, box] under the exact model
    double eap() const {
        const int n = panels | 1 ? panels + (panels % 2) : panels;
        std::vector<double> wts(n + 1);
        for (int k = 0; k <= n; ++k) wts[k] = k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0);
        const double hstep = 2.0 * box / n;
        // q depends on (v - u) only: cache the inner quadratures per diagonal
        std::vector<double> m0(2 * n + 1), m1(2 * n + 1);
        for (int t = 0; t <= 2 * n; ++t) {
            const double diff = -2.0 * box + t * hstep;  // v - u
            const oracles::ScalarModel m{y, std::exp(diff)};
            m0[t] = m.moment(0);
            m1[t] = m.moment(1);
        }
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double u = -box + i * hstep;
            for (int j = 0; j <= n; ++j) {
                const double v = -box + j * hstep;
                const double q = std::exp(v - u);
                // e^{u+v} flat-prior Jacobian times sqrt(q/2pi) prior normalizer
                const double w =
                    wts[i] * wts[j] * std::exp(u + v) * std::sqrt(q / (2.0 * std::numbers::pi));
                num += w * m1[j - i + n];
                den += w * m0[j - i + n];
            }
        }
        return num / den;
    }
};

Outcome scalar_quadrature_oracle() {
    Outcome out;
    const double t0 = now();
    const GridGraph g{1, 1};
    const double box = 2.0;
    for (const std::int64_t yv : {std::int64_t{0}, std::int64_t{1}, std::int64_t{5}}) {
        const CountField y{1, 1, {yv}};
        const PoissonObs obs(y);
        const InlaEngine engine(g, obs);

        const double oracle_eap = ScalarBoxOracle{yv, box}.eap();

        // INLA machinery on the same box: theta lattice + mixture integration
        const int lat = 41;
        const double step = 2.0 * box / (lat - 1);
        std::vector<HyperPoint> points;
        points.reserve(lat * lat);
        for (int i = 0; i < lat; ++i) {
            for (int j = 0; j < lat; ++j) {
                const Vec2 theta = {std::exp(-box + i * step), std::exp(-box + j * step)};
                points.push_back(engine.evaluate_theta(theta, {0.0, 0.0}, step * step));
            }
        }
        const PosteriorMarginals marg = integrate_marginals(points);
        const double inla_gap = std::fabs(marg.eap[0] - oracle_eap);
        out.check(inla_gap <= 0.02, "y=" + std::to_string(yv) + ": |EAP_inla - EAP_oracle| = " +
                                        fmt(inla_gap) + " (inla " + fmt(marg.eap[0]) +
                                        ", oracle " + fmt(oracle_eap) + ") <= 0.02");

        // MALA over the same box: theta sampled within the log-theta bounds
        ChainConfig cfg;
        cfg.steps = 200000;
        cfg.burn_in = 40000;
        cfg.seed = 2024 + static_cast<std::uint64_t>(yv);
        cfg.theta_mode = ChainConfig::ThetaMode::sample;
        cfg.theta = {1.0, 1.0};
        cfg.theta_rw_step = 0.8;
        cfg.theta_log_bounds = std::array<double, 4>{-box, box, -box, box};
        const ChainSummary chain = run_chain(g, y, cfg);
        const double mala_gap = std::fabs(chain.mean[0] - oracle_eap);
        out.check(mala_gap <= 0.01, "y=" + std::to_string(yv) +
                                        ": |EAP_mala - EAP_oracle| = " + fmt(mala_gap) +
                                        " <= 0.01 (200k steps)");

        // supporting check: fixed-theta chain against the 1-d quadrature
        ChainConfig fixed_cfg;
        fixed_cfg.steps = 200000;
        fixed_cfg.burn_in = 20000;
        fixed_cfg.seed = 77 + static_cast<std::uint64_t>(yv);
        fixed_cfg.theta = {1.0, 1.0};
        const ChainSummary fixed_chain = run_chain(g, y, fixed_cfg);
        const oracles::ScalarModel sm{yv, 1.0};
        const double fixed_gap = std::fabs(fixed_chain.mean[0] - sm.posterior_mean());
        out.check(fixed_gap <= 0.01, "y=" + std::to_string(yv) +
                                         ": fixed-theta chain vs 1-d quadrature: " +
                                         fmt(fixed_gap) + " <= 0.01");
    }
    const double elapsed = now() - t0;
    out.check(elapsed < 120.0, "runtime " + fmt(elapsed) + " s < 2 min");
    return out;
}

std::vector<double> sinusoid32() {
    const int n = 32;
    std::vector<double> img(n * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            img[r * n + c] =
                128.0 +
                80.0 * std::sin(2.0 * std::numbers::pi * r / n) *
                    std::cos(2.0 * std::numbers::pi * c / n) +
                40.0 * std::sin(2.0 * std::numbers::pi * (r + c) / n);
    return img;
}

Outcome consistency_32x32() {
    Outcome out;
    const double t0 = now();
    const int n = 32;
    const GridGraph g{n, n};
    PixelImage img;
    img.rows = n;
    img.cols = n;
    img.pixels = sinusoid32();
    const auto [xtrue, transform] = intensity_forward(img, ContrastParams{2.0, 25.0});
    const CountField y = corrupt_poisson(xtrue, n, n, 7);
    const PoissonObs obs(y);

    InlaConfig cfg;
    cfg.strategy = Strategy::ccd;
    const InlaResult inla = InlaEngine(g, obs, cfg).run();

    ChainConfig ccfg;
    ccfg.steps = 100000;
    ccfg.burn_in = 20000;
    ccfg.seed = 11;
    ccfg.theta = inla.mode->theta_star;
    const ChainSummary chain = run_chain(g, y, ccfg);

    double mad = 0.0;
    for (index_t i = 0; i < g.n(); ++i)
        mad += std::fabs(chain.mean[i] - inla.marginals.eap[i]);
    mad /= static_cast<double>(g.n());
    const double psnr_inla = psnr(xtrue, inla.marginals.eap);
    const double psnr_mala = psnr(xtrue, chain.mean);
    out.check(mad <= 0.1, "mean |EAP_inla - EAP_mala| = " + fmt(mad) + " <= 0.1");
    out.check(std::fabs(psnr_inla - psnr_mala) <= 1.0,
              "|PSNR_inla - PSNR_mala| = " + fmt(std::fabs(psnr_inla - psnr_mala)) +
                  " dB <= 1 dB (inla " + fmt(psnr_inla) + ", mala " + fmt(psnr_mala) + ")");
    const double elapsed = now() - t0;
    out.check(elapsed < 300.0, "runtime " + fmt(elapsed) + " s < 5 min");
    return out;
}

Outcome denoising_improvement() {
    Outcome out;
    const int n = 32;
    const GridGraph g{n, n};
    PixelImage img;
    img.rows = n;
    img.cols = n;
    img.pixels = sinusoid32();
    const auto [xtrue, transform] = intensity_forward(img, ContrastParams{2.0, 25.0});

    int psnr_wins = 0, ssim_wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const CountField y = corrupt_poisson(xtrue, n, n, seed);
        const PoissonObs obs(y);
        InlaConfig cfg;
        cfg.strategy = Strategy::ccd;
        const InlaResult res = InlaEngine(g, obs, cfg).run();
        std::vector<double> counts(xtrue.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            counts[i] = static_cast<double>(y.counts[i]);
        if (psnr(xtrue, res.marginals.eap) > psnr(xtrue, counts)) ++psnr_wins;
        if (compute_metrics(xtrue, res.marginals.eap).ssim >
            compute_metrics(xtrue, counts).ssim)
            ++ssim_wins;
    }
    out.check(psnr_wins >= 9, "PSNR improved in " + std::to_string(psnr_wins) + "/10 seeds");
    out.check(ssim_wins >= 9, "SSIM improved in " + std::to_string(ssim_wins) + "/10 seeds");
    return out;
}

Outcome metric_correctness() {
    Outcome out;
    const double t0 = now();
    std::mt19937 gen(2718);
    std::uniform_real_distribution<double> unif(0.0, 40.0);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> g(100), h(100);
        for (std::size_t i = 0; i < 100; ++i) {
            g[i] = unif(gen);
            h[i] = unif(gen);
        }
        long double se = 0.0L, sg = 0.0L, sh = 0.0L, lo = g[0], hi = g[0];
        for (std::size_t i = 0; i < 100; ++i) {
            se += (static_cast<long double>(g[i]) - h[i]) *
                  (static_cast<long double>(g[i]) - h[i]);
            sg += g[i];
            sh += h[i];
            lo = std::min({lo, static_cast<long double>(g[i]), static_cast<long double>(h[i])});
            hi = std::max({hi, static_cast<long double>(g[i]), static_cast<long double>(h[i])});
        }
        const long double mse_oracle = se / 100.0L;
        const long double range = hi - lo;
        const long double psnr_oracle = 10.0L * std::log10(range * range / mse_oracle);
        long double mg = sg / 100.0L, mh = sh / 100.0L, vg = 0.0L, vh = 0.0L, cov = 0.0L;
        for (std::size_t i = 0; i < 100; ++i) {
            vg += (g[i] - mg) * (g[i] - mg);
            vh += (h[i] - mh) * (h[i] - mh);
            cov += (g[i] - mg) * (h[i] - mh);
        }
        vg /= 100.0L;
        vh /= 100.0L;
        cov /= 100.0L;
        const double c1 = 1e-4 * static_cast<double>(range * range);
        const double c2 = 9e-4 * static_cast<double>(range * range);
        const long double ssim_oracle = (2.0L * mg * mh + c1) * (2.0L * cov + c2) /
                                        ((mg * mg + mh * mh + c1) * (vg + vh + c2));
        worst = std::max(worst,
                         std::fabs(mse(g, h) - static_cast<double>(mse_oracle)));
        worst = std::max(worst,
                         std::fabs(psnr(g, h) - static_cast<double>(psnr_oracle)));
        worst = std::max(worst, std::fabs(ssim(g, h, c1, c2) -
                                          static_cast<double>(ssim_oracle)));
    }
    out.check(worst <= 1e-12, "max deviation from brute-force oracles: " + fmt(worst));

    const std::vector<double> a = {1.0, 2.0, 3.0};
    out.check(mse(a, a) == 0.0 && std::isinf(psnr(a, a)), "identical images: mse 0, psnr inf");
    bool degenerate_throws = false;
    try {
        const std::vector<double> c = {5.0, 5.0};
        psnr(c, c);
    } catch (const DegenerateRange&) {
        degenerate_throws = true;
    }
    out.check(degenerate_throws, "jointly constant images raise DegenerateRange");
    const double elapsed = now() - t0;
    out.check(elapsed < 5.0, "runtime " + fmt(elapsed) + " s < 5 s");
    return out;
}

#ifdef PIXINLA_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(PIXINLA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
#endif

Outcome determinism() {
    Outcome out;
#ifndef PIXINLA_CLI_PATH
    out.check(false, "CLI binary not available");
    return out;
#else
    const fs::path dir =
        fs::temp_directory_path() / ("pixinla-accept-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);

    PixelImage img;
    img.rows = 16;
    img.cols = 16;
    img.pixels.resize(256);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            img.pixels[r * 16 + c] =
                120.0 + 100.0 * std::sin(0.4 * r) * std::cos(0.4 * c);
    write_pgm_file(dir / "orig.pgm", img);

    for (const char* run : {"a", "b"}) {
        const json cfg = {
            {"input", (dir / "orig.pgm").string()},
            {"out", (dir / run).string()},
            {"seed", 9},
            {"engines",
             {{{"engine", "inla"}, {"strategy", "ccd"}},
              {{"engine", "mcmc"}, {"steps", 3000}, {"burn_in", 1000}, {"chain_seed", 4}}}},
        };
        std::ofstream(dir / (std::string("cfg-") + run + ".json")) << cfg.dump();
        const int rc = run_cli("pipeline --config " +
                               (dir / (std::string("cfg-") + run + ".json")).string());
        out.check(rc == 0, std::string("pipeline run ") + run + " exit code " +
                               std::to_string(rc));
    }
    out.check(slurp(dir / "a/noisy/counts.csv") == slurp(dir / "b/noisy/counts.csv"),
              "counts.csv identical across reruns");
    for (const char* tag : {"inla-ccd", "mcmc"}) {
        out.check(slurp(dir / "a" / tag / "eap.csv") == slurp(dir / "b" / tag / "eap.csv"),
                  std::string(tag) + "/eap.csv identical across reruns");
        json ra = json::parse(slurp(dir / "a" / tag / "report.json"));
        json rb = json::parse(slurp(dir / "b" / tag / "report.json"));
        ra.erase("timings");
        rb.erase("timings");
        out.check(ra == rb, std::string(tag) + "/report.json identical minus timings");
    }
    fs::remove_all(dir);
    return out;
#endif
}

// Advisory: requires a user-supplied 128x128 grayscale crop; excluded from
// the gate (reference values depend on an unstated crop and SSIM variant).
Outcome paper_scale() {
    Outcome out;
    if (g_paper_image.empty()) {
        out.skipped = true;
        out.note("advisory; pass --paper-image <128x128 pgm> to run");
        return out;
    }
    const double t0 = now();
    PixelImage img = read_pgm_file(g_paper_image);
    if (img.rows != 128 || img.cols != 128) img = center_crop(img, 128, 128);
    const GridGraph g{img.rows, img.cols};
    const auto [xtrue, transform] = intensity_forward(img, ContrastParams{2.0, 25.0});
    const CountField y = corrupt_poisson(xtrue, img.rows, img.cols, 7);
    const PoissonObs obs(y);
    InlaConfig cfg;
    cfg.strategy = Strategy::ccd;
    const InlaResult res = InlaEngine(g, obs, cfg).run();
    const double elapsed = now() - t0;
    const double p = psnr(xtrue, res.marginals.eap);
    const double s = compute_metrics(xtrue, res.marginals.eap).ssim;
    out.check(elapsed <= 600.0, "full INLA pipeline in " + fmt(elapsed) + " s <= 10 min");
    out.check(std::fabs(p - 22.24) <= 1.5,
              "PSNR " + fmt(p) + " within +-1.5 dB of 22.24 (advisory)");
    out.check(std::fabs(s - 0.966) <= 0.05,
              "SSIM " + fmt(s) + " within +-0.05 of 0.966 (advisory)");
    return out;
}

const std::map<std::string, std::function<Outcome()>> kCriteria = {
    {"linear_algebra_oracles", linear_algebra_oracles},
    {"gaussian_exactness", gaussian_exactness},
    {"scalar_quadrature_oracle", scalar_quadrature_oracle},
    {"consistency_32x32", consistency_32x32},
    {"denoising_improvement", denoising_improvement},
    {"metric_correctness", metric_correctness},
    {"determinism", determinism},
    {"paper_scale", paper_scale},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--paper-image" && i + 1 < argc) {
            g_paper_image = argv[++i];
        } else if (kCriteria.contains(arg)) {
            selected.push_back(arg);
        } else {
            std::fprintf(stderr, "unknown criterion: %s\n", arg.c_str());
            return 64;
        }
    }
    if (selected.empty())
        for (const auto& [name, fn] : kCriteria) selected.push_back(name);

    int failures = 0;
    for (const auto& name : selected) {
        Outcome o;
        try {
            o = kCriteria.at(name)();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("exception: ") + e.what());
        }
        const char* tag = o.skipped ? "SKIP" : o.pass ? "PASS" : "FAIL";
        std::printf("[%s] %s\n", tag, name.c_str());
        for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
        std::fflush(stdout);
        if (!o.pass && !o.skipped) ++failures;
    }
    return failures;
}
