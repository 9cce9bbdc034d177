// pybind11 surface: the main library operations on numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "pixinla/errors.hpp"
#include "pixinla/imaging.hpp"
#include "pixinla/inla.hpp"
#include "pixinla/mcmc.hpp"
#include "pixinla/metrics.hpp"
#include "pixinla/rng.hpp"
#include "pixinla/version.hpp"

namespace py = pybind11;
using namespace pixinla;

namespace {

struct Shape2 {
    index_t rows;
    index_t cols;
};

Shape2 shape_of(const py::array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    return {static_cast<index_t>(a.shape(0)), static_cast<index_t>(a.shape(1))};
}

std::vector<double> to_field(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return std::vector<double>(a.data(), a.data() + a.size());
}

CountField to_counts(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& a) {
    const Shape2 s = shape_of(a);
    CountField y;
    y.rows = s.rows;
    y.cols = s.cols;
    y.counts.assign(a.data(), a.data() + a.size());
    y.validate();
    return y;
}

py::array_t<double> to_numpy(std::span<const double> v, index_t rows, index_t cols) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> to_numpy_1d(std::span<const double> v) {
    py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Strategy strategy_of(const std::string& name) {
    if (name == "ccd") return Strategy::ccd;
    if (name == "grid") return Strategy::grid;
    if (name == "fixed") return Strategy::fixed;
    throw py::value_error("strategy must be one of: ccd, grid, fixed");
}

/// Restoration result handed to Python: summaries plus the per-point mixture.
struct InlaFit {
    index_t rows = 0, cols = 0;
    PosteriorMarginals marginals;
    std::optional<Vec2> mode_theta;
    std::string strategy;
    InlaTimings timings;
};

InlaFit run_inla(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& counts,
                 const std::string& strategy, double delta_z, double delta_pi, double f0,
                 std::pair<double, double> theta_init,
                 std::optional<std::pair<double, double>> fixed_theta, int workers,
                 std::size_t max_points) {
    const CountField y = to_counts(counts);
    const GridGraph g{y.rows, y.cols};
    InlaConfig cfg;
    cfg.strategy = strategy_of(strategy);
    cfg.delta_z = delta_z;
    cfg.delta_pi = delta_pi;
    cfg.f0 = f0;
    cfg.theta_init = {theta_init.first, theta_init.second};
    if (fixed_theta) cfg.fixed_theta = Vec2{fixed_theta->first, fixed_theta->second};
    cfg.workers = workers;
    cfg.max_points = max_points;
    const PoissonObs obs(y);
    InlaResult res;
    {
        py::gil_scoped_release release;
        res = InlaEngine(g, obs, cfg).run();
    }
    InlaFit fit;
    fit.rows = y.rows;
    fit.cols = y.cols;
    fit.marginals = std::move(res.marginals);
    if (res.mode) fit.mode_theta = res.mode->theta_star;
    fit.strategy = strategy;
    fit.timings = res.timings;
    return fit;
}

struct MalaFit {
    ChainSummary summary;
};

MalaFit run_mala(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& counts,
                 double sigma2, double d, std::int64_t steps, std::int64_t burn_in,
                 std::uint64_t seed, double step_size, const std::string& theta_mode,
                 int hist_bins,
                 std::optional<std::array<double, 4>> theta_log_bounds) {
    const CountField y = to_counts(counts);
    const GridGraph g{y.rows, y.cols};
    ChainConfig cfg;
    cfg.steps = steps;
    cfg.burn_in = burn_in;
    cfg.seed = seed;
    cfg.step_size = step_size;
    cfg.theta = {sigma2, d};
    cfg.hist_bins = hist_bins;
    if (theta_mode == "fixed") cfg.theta_mode = ChainConfig::ThetaMode::fixed;
    else if (theta_mode == "sample") cfg.theta_mode = ChainConfig::ThetaMode::sample;
    else throw py::value_error("theta_mode must be 'fixed' or 'sample'");
    cfg.theta_log_bounds = theta_log_bounds;
    MalaFit fit;
    {
        py::gil_scoped_release release;
        fit.summary = run_chain(g, y, cfg);
    }
    return fit;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bayesian restoration of Poisson-corrupted images with a lattice "
              "ICAR prior: Laplace/INLA engine, MALA baseline, image metrics.";
    m.attr("__version__") = kVersion;
    m.attr("RNG_NAME") = kRngName;

    py::register_exception<Error>(m, "PixinlaError", PyExc_RuntimeError);

    m.def("read_pgm",
          [](const std::string& path) {
              const PixelImage img = read_pgm_file(path);
              return to_numpy(img.pixels, img.rows, img.cols);
          },
          py::arg("path"), "Read a P2/P5 PGM image as a 2-d float array.");
    m.def("write_pgm",
          [](const std::string& path, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
              const Shape2 s = shape_of(a);
              PixelImage img;
              img.rows = s.rows;
              img.cols = s.cols;
              img.pixels = to_field(a);
              write_pgm_file(path, img);
          },
          py::arg("path"), py::arg("image"),
          "Write a 2-d array as binary PGM (clamped and rounded to 8 bits).");

    m.def("intensity_forward",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             double lambda_min, double lambda_max) {
              const Shape2 s = shape_of(a);
              PixelImage img;
              img.rows = s.rows;
              img.cols = s.cols;
              img.pixels = to_field(a);
              const auto [x, t] = intensity_forward(img, ContrastParams{lambda_min, lambda_max});
              return py::make_tuple(to_numpy(x, s.rows, s.cols), t.i_min, t.i_max);
          },
          py::arg("image"), py::arg("lambda_min") = 2.0, py::arg("lambda_max") = 25.0,
          "Linear transform of pixel intensities onto [lambda_min, lambda_max]; "
          "returns (rates, i_min, i_max).");
    m.def("intensity_inverse",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             double i_min, double i_max, double lambda_min, double lambda_max) {
              const Shape2 s = shape_of(a);
              IntensityTransform t;
              t.i_min = i_min;
              t.i_max = i_max;
              t.contrast = ContrastParams{lambda_min, lambda_max};
              const PixelImage img = intensity_inverse(to_field(a), t, s.rows, s.cols);
              return to_numpy(img.pixels, s.rows, s.cols);
          },
          py::arg("rates"), py::arg("i_min"), py::arg("i_max"),
          py::arg("lambda_min") = 2.0, py::arg("lambda_max") = 25.0);

    m.def("corrupt_poisson",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             std::uint64_t seed) {
              const Shape2 s = shape_of(a);
              const CountField y = corrupt_poisson(to_field(a), s.rows, s.cols, seed);
              py::array_t<std::int64_t> out(
                  {static_cast<py::ssize_t>(s.rows), static_cast<py::ssize_t>(s.cols)});
              std::copy(y.counts.begin(), y.counts.end(), out.mutable_data());
              return out;
          },
          py::arg("rates"), py::arg("seed"),
          "Seeded per-pixel Poisson draws (deterministic, versioned generator).");

    m.def("grid_logdet",
          [](index_t rows, index_t cols, double sigma2, double d) {
              return grid_logdet(GridGraph{rows, cols}, IcarHyper(sigma2, d));
          },
          py::arg("rows"), py::arg("cols"), py::arg("sigma2"), py::arg("d"),
          "Closed-form log-determinant of the proper-ICAR precision.");
    m.def("prior_logpdf",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
             double sigma2, double d) {
              const Shape2 s = shape_of(a);
              return prior_logpdf(to_field(a), GridGraph{s.rows, s.cols},
                                  IcarHyper(sigma2, d));
          },
          py::arg("field"), py::arg("sigma2"), py::arg("d"));
    m.def("icar_precision_dense",
          [](index_t rows, index_t cols, double sigma2, double d) {
              const SparseSymMatrix Q =
                  build_icar_precision(GridGraph{rows, cols}, IcarHyper(sigma2, d));
              py::array_t<double> out(
                  {static_cast<py::ssize_t>(Q.n), static_cast<py::ssize_t>(Q.n)});
              auto view = out.mutable_unchecked<2>();
              for (index_t i = 0; i < Q.n; ++i)
                  for (index_t j = 0; j < Q.n; ++j) view(i, j) = 0.0;
              for (index_t j = 0; j < Q.n; ++j) {
                  for (index_t p = Q.col_ptr[j]; p < Q.col_ptr[j + 1]; ++p) {
                      view(Q.row_idx[p], j) = Q.values[p];
                      view(j, Q.row_idx[p]) = Q.values[p];
                  }
              }
              return out;
          },
          py::arg("rows"), py::arg("cols"), py::arg("sigma2"), py::arg("d"),
          "Dense copy of the ICAR precision (small grids; for inspection).");

    m.def("poisson_loglik",
          [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& counts,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
              return poisson_loglik(to_counts(counts), to_field(x));
          },
          py::arg("counts"), py::arg("rates"));

    m.def("gaussian_approx",
          [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& counts,
             double sigma2, double d) {
              const CountField y = to_counts(counts);
              const GridGraph g{y.rows, y.cols};
              const GaussianApprox ga = gaussian_approx(g, IcarHyper(sigma2, d), y);
              py::dict out;
              out["mode"] = to_numpy(ga.mode, y.rows, y.cols);
              out["cond_variances"] = to_numpy(ga.cond_variances, y.rows, y.cols);
              out["log_density_at_mode"] = ga.log_density_at_mode;
              out["iterations"] = ga.iterations;
              py::array_t<bool> clamped(
                  {static_cast<py::ssize_t>(y.rows), static_cast<py::ssize_t>(y.cols)});
              std::copy(ga.clamped.begin(), ga.clamped.end(), clamped.mutable_data());
              out["clamped"] = clamped;
              return out;
          },
          py::arg("counts"), py::arg("sigma2"), py::arg("d"),
          "Gaussian approximation of p(x | theta, y) at the safeguarded Newton mode.");

    py::class_<InlaFit>(m, "InlaFit")
        .def_property_readonly("eap",
                               [](const InlaFit& f) {
                                   return to_numpy(f.marginals.eap, f.rows, f.cols);
                               })
        .def_property_readonly("variance",
                               [](const InlaFit& f) {
                                   return to_numpy(f.marginals.variance, f.rows, f.cols);
                               })
        .def_property_readonly("weights",
                               [](const InlaFit& f) { return to_numpy_1d(f.marginals.weights); })
        .def_property_readonly("thetas",
                               [](const InlaFit& f) {
                                   py::array_t<double> out(
                                       {static_cast<py::ssize_t>(f.marginals.thetas.size()),
                                        static_cast<py::ssize_t>(2)});
                                   auto view = out.mutable_unchecked<2>();
                                   for (std::size_t h = 0; h < f.marginals.thetas.size(); ++h) {
                                       view(h, 0) = f.marginals.thetas[h][0];
                                       view(h, 1) = f.marginals.thetas[h][1];
                                   }
                                   return out;
                               })
        .def_property_readonly("log_posts",
                               [](const InlaFit& f) { return to_numpy_1d(f.marginals.log_posts); })
        .def_property_readonly("mode_theta",
                               [](const InlaFit& f) -> py::object {
                                   if (!f.mode_theta) return py::none();
                                   return py::make_tuple((*f.mode_theta)[0], (*f.mode_theta)[1]);
                               })
        .def_readonly("strategy", &InlaFit::strategy)
        .def_property_readonly("point_count",
                               [](const InlaFit& f) { return f.marginals.point_count(); })
        .def("marginal_density",
             [](const InlaFit& f, index_t pixel,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& grid) {
                 if (pixel < 0 || pixel >= f.marginals.n)
                     throw py::value_error("pixel index out of range");
                 py::array_t<double> out(std::vector<py::ssize_t>{grid.size()});
                 for (py::ssize_t k = 0; k < grid.size(); ++k)
                     out.mutable_data()[k] = f.marginals.density(pixel, grid.data()[k]);
                 return out;
             },
             py::arg("pixel"), py::arg("abscissae"),
             "Mixture marginal density of one pixel on a grid of abscissae.")
        .def("marginal_cdf",
             [](const InlaFit& f, index_t pixel, double t) {
                 if (pixel < 0 || pixel >= f.marginals.n)
                     throw py::value_error("pixel index out of range");
                 return f.marginals.cdf(pixel, t);
             },
             py::arg("pixel"), py::arg("t"));

    m.def("restore_inla", &run_inla, py::arg("counts"), py::arg("strategy") = "ccd",
          py::arg("delta_z") = 1.0, py::arg("delta_pi") = 2.5,
          py::arg("f0") = 1.4142135623730951,
          py::arg("theta_init") = std::pair<double, double>{1.0, 1.0},
          py::arg("fixed_theta") = std::nullopt, py::arg("workers") = 0,
          py::arg("max_points") = std::size_t{10000},
          "Full INLA pass over the hyperparameters; returns posterior marginals.");

    py::class_<MalaFit>(m, "MalaFit")
        .def_property_readonly("eap",
                               [](const MalaFit& f) {
                                   return to_numpy(f.summary.mean, f.summary.rows,
                                                   f.summary.cols);
                               })
        .def_property_readonly("variance",
                               [](const MalaFit& f) {
                                   return to_numpy(f.summary.variance, f.summary.rows,
                                                   f.summary.cols);
                               })
        .def_property_readonly("accept_rate",
                               [](const MalaFit& f) { return f.summary.accept_rate; })
        .def_property_readonly("final_step_size",
                               [](const MalaFit& f) { return f.summary.final_step_size; })
        .def_property_readonly("theta_mean",
                               [](const MalaFit& f) {
                                   return py::make_tuple(f.summary.theta_mean[0],
                                                         f.summary.theta_mean[1]);
                               })
        .def_property_readonly("hist_edges",
                               [](const MalaFit& f) { return to_numpy_1d(f.summary.hist_edges); })
        .def_property_readonly("hist_counts", [](const MalaFit& f) {
            const auto bins = static_cast<py::ssize_t>(f.summary.hist_edges_count());
            py::array_t<std::int64_t> out(
                {static_cast<py::ssize_t>(f.summary.rows) * f.summary.cols, bins});
            std::copy(f.summary.hist_counts.begin(), f.summary.hist_counts.end(),
                      out.mutable_data());
            return out;
        });

    m.def("run_mala", &run_mala, py::arg("counts"), py::arg("sigma2"), py::arg("d"),
          py::arg("steps") = 2000, py::arg("burn_in") = 1000, py::arg("seed") = 0,
          py::arg("step_size") = 0.25, py::arg("theta_mode") = "fixed",
          py::arg("hist_bins") = 64, py::arg("theta_log_bounds") = std::nullopt,
          "Metropolis-adjusted Langevin baseline on u = ln x (exact target).");

    m.def("mse",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& h) {
              return mse(to_field(g), to_field(h));
          },
          py::arg("g"), py::arg("h"));
    m.def("psnr",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& h) {
              return psnr(to_field(g), to_field(h));
          },
          py::arg("g"), py::arg("h"),
          "Peak signal-to-noise ratio over the pooled dynamic range.");
    m.def("ssim",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
             std::optional<double> c1, std::optional<double> c2) {
              if (c1 && c2) return ssim(to_field(g), to_field(h), *c1, *c2);
              return compute_metrics(to_field(g), to_field(h)).ssim;
          },
          py::arg("g"), py::arg("h"), py::arg("c1") = std::nullopt,
          py::arg("c2") = std::nullopt,
          "Global (non-windowed) SSIM; default constants (0.01 R)^2 and (0.03 R)^2.");
    m.def("compute_metrics",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& h) {
              const MetricReport r = compute_metrics(to_field(g), to_field(h));
              py::dict out;
              out["mse"] = r.mse;
              out["psnr"] = r.psnr;
              out["ssim"] = r.ssim;
              out["c1"] = r.c1;
              out["c2"] = r.c2;
              return out;
          },
          py::arg("g"), py::arg("h"));
}
