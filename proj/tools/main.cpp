// pixinla command-line front end: corrupt / restore / evaluate / pipeline.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pixinla/errors.hpp"
#include "pixinla/imaging.hpp"
#include "pixinla/inla.hpp"
#include "pixinla/mcmc.hpp"
#include "pixinla/metrics.hpp"
#include "pixinla/rng.hpp"
#include "pixinla/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pixinla;

namespace {

constexpr const char* kReportSchema = "pixinla-report-v1";
constexpr const char* kMetaSchema = "pixinla-meta-v1";

int exit_code_of(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::validation: return 2;
        case ErrorKind::numerical: return 3;
        case ErrorKind::io: return 4;
    }
    return 3;
}

double wall_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

/// Staged output directory: files are written to a hidden scratch directory
/// and moved into place only after the whole command has succeeded, so a
/// failure never leaves partial outputs behind.
class StageDir {
public:
    explicit StageDir(const fs::path& out) : out_(out) {
        fs::create_directories(out_);
        stage_ = out_ / (".stage-" + std::to_string(::getpid()));
        fs::create_directories(stage_);
    }
    ~StageDir() {
        std::error_code ec;
        fs::remove_all(stage_, ec);
    }
    fs::path path(const std::string& name) {
        files_.push_back(name);
        return stage_ / name;
    }
    void commit() {
        for (const auto& name : files_) {
            if (fs::exists(stage_ / name)) fs::rename(stage_ / name, out_ / name);
        }
        files_.clear();
    }

private:
    fs::path out_;
    fs::path stage_;
    std::vector<std::string> files_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string counts_csv(const CountField& y) {
    std::string out;
    for (index_t r = 0; r < y.rows; ++r) {
        for (index_t c = 0; c < y.cols; ++c) {
            if (c) out += ',';
            out += std::to_string(y.counts[static_cast<std::size_t>(r) * y.cols + c]);
        }
        out += '\n';
    }
    return out;
}

std::string field_csv(std::span<const double> x, index_t rows, index_t cols) {
    std::string out;
    for (index_t r = 0; r < rows; ++r) {
        for (index_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            out += format_full(x[static_cast<std::size_t>(r) * cols + c]);
        }
        out += '\n';
    }
    return out;
}

CountField parse_counts_csv(const std::string& text) {
    CountField y;
    std::vector<std::int64_t> values;
    std::int32_t cols = -1;
    std::int32_t rows = 0;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::stringstream cells(line);
        std::string cell;
        std::int32_t this_cols = 0;
        while (std::getline(cells, cell, ',')) {
            try {
                values.push_back(std::stoll(cell));
            } catch (const std::exception&) {
                throw IoError("counts.csv holds a non-integer cell: " + cell);
            }
            ++this_cols;
        }
        if (cols < 0) cols = this_cols;
        if (this_cols != cols) throw IoError("counts.csv rows have uneven lengths");
        ++rows;
    }
    if (rows == 0) throw IoError("counts.csv is empty");
    y.rows = rows;
    y.cols = cols;
    y.counts = std::move(values);
    y.validate();
    return y;
}

std::vector<double> parse_field_csv(const std::string& text, index_t rows, index_t cols) {
    std::vector<double> values;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ','))
            values.push_back(std::stod(cell));
    }
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw IoError("field CSV does not match the expected shape");
    return values;
}

json psnr_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

json metrics_json(const MetricReport& r, const std::string& space) {
    return json{{"space", space},     {"mse", r.mse}, {"psnr", psnr_json(r.psnr)},
                {"ssim", r.ssim},     {"c1", r.c1},   {"c2", r.c2}};
}

struct Sidecar {
    std::uint64_t seed = 0;
    ContrastParams contrast;
    IntensityTransform transform;
    index_t rows = 0, cols = 0;
};

Sidecar load_sidecar(const fs::path& dir) {
    const json meta = load_json(dir / "meta.json");
    Sidecar s;
    try {
        s.seed = meta.at("seed").get<std::uint64_t>();
        s.contrast.lambda_min = meta.at("lambda_min").get<double>();
        s.contrast.lambda_max = meta.at("lambda_max").get<double>();
        s.transform.i_min = meta.at("i_min").get<double>();
        s.transform.i_max = meta.at("i_max").get<double>();
        s.transform.contrast = s.contrast;
        s.rows = meta.at("rows").get<index_t>();
        s.cols = meta.at("cols").get<index_t>();
    } catch (const json::exception& e) {
        throw IoError("meta.json is missing required keys: " + std::string(e.what()));
    }
    return s;
}

// ---------------------------------------------------------------------------
// corrupt

struct CorruptArgs {
    std::string input;
    std::string out;
    double lmin = 2.0;
    double lmax = 25.0;
    std::uint64_t seed = 0;
    int crop = 0;  // optional center crop to crop x crop
};

int run_corrupt(const CorruptArgs& a) {
    const ContrastParams contrast{a.lmin, a.lmax};
    contrast.validate();
    PixelImage img = read_pgm_file(a.input);
    if (a.crop > 0) img = center_crop(img, a.crop, a.crop);
    const auto [x, transform] = intensity_forward(img, contrast);
    const CountField y = corrupt_poisson(x, img.rows, img.cols, a.seed);

    StageDir stage(a.out);
    write_text(stage.path("counts.csv"), counts_csv(y));
    PixelImage view;  // clamped copy for humans; exact counts live in the CSV
    view.rows = img.rows;
    view.cols = img.cols;
    view.pixels.resize(y.counts.size());
    for (std::size_t i = 0; i < y.counts.size(); ++i) {
        const double rate = static_cast<double>(y.counts[i]);
        view.pixels[i] = transform.inverse(rate);
    }
    write_pgm_file(stage.path("view.pgm"), view);
    const json meta = {
        {"schema", kMetaSchema},
        {"seed", a.seed},
        {"lambda_min", contrast.lambda_min},
        {"lambda_max", contrast.lambda_max},
        {"i_min", transform.i_min},
        {"i_max", transform.i_max},
        {"rows", img.rows},
        {"cols", img.cols},
        {"rng", kRngName},
        {"library_version", kVersion},
    };
    write_text(stage.path("meta.json"), meta.dump(2) + "\n");
    stage.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// restore

struct RestoreArgs {
    std::string input;
    std::string out;
    std::string engine = "inla";
    // inla
    std::string strategy = "ccd";
    double delta_z = 1.0;
    double delta_pi = 2.5;
    double f0 = std::numbers::sqrt2;
    std::vector<double> theta_init = {1.0, 1.0};
    std::vector<double> fixed_theta;
    double mode_grad_tol = 1e-5;
    double newton_grad_tol = 1e-8;
    int workers = 0;
    std::size_t max_points = 10000;
    // mcmc
    std::int64_t steps = 2000;
    std::int64_t burn_in = 1000;
    double step_size = 0.25;
    std::uint64_t chain_seed = 0;
    std::string theta_mode = "fixed";
    std::vector<double> theta;
    int hist_bins = 64;
    // marginal dumps
    std::vector<index_t> marginal_pixels;
    int marginal_abscissae = 200;
};

InlaConfig inla_config_of(const RestoreArgs& a) {
    InlaConfig cfg;
    if (a.strategy == "ccd") cfg.strategy = Strategy::ccd;
    else if (a.strategy == "grid") cfg.strategy = Strategy::grid;
    else if (a.strategy == "fixed") cfg.strategy = Strategy::fixed;
    else throw InvalidConfig("unknown strategy: " + a.strategy);
    cfg.delta_z = a.delta_z;
    cfg.delta_pi = a.delta_pi;
    cfg.f0 = a.f0;
    if (a.theta_init.size() != 2) throw InvalidConfig("--theta-init needs two values");
    cfg.theta_init = {a.theta_init[0], a.theta_init[1]};
    if (!a.fixed_theta.empty()) {
        if (a.fixed_theta.size() != 2) throw InvalidConfig("--fixed-theta needs two values");
        cfg.fixed_theta = Vec2{a.fixed_theta[0], a.fixed_theta[1]};
    }
    cfg.mode_grad_tol = a.mode_grad_tol;
    cfg.newton.grad_tol = a.newton_grad_tol;
    cfg.workers = a.workers;
    cfg.max_points = a.max_points;
    return cfg;
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::ccd: return "ccd";
        case Strategy::grid: return "grid";
        case Strategy::fixed: return "fixed";
    }
    return "ccd";
}

json config_echo_inla(const InlaConfig& cfg) {
    json j = {
        {"strategy", strategy_name(cfg.strategy)},
        {"delta_z", cfg.delta_z},
        {"delta_pi", cfg.delta_pi},
        {"f0", cfg.f0},
        {"theta_init", {cfg.theta_init[0], cfg.theta_init[1]}},
        {"mode_grad_tol", cfg.mode_grad_tol},
        {"newton_grad_tol", cfg.newton.grad_tol},
        {"workers", cfg.workers},
        {"max_points", cfg.max_points},
    };
    if (cfg.fixed_theta)
        j["fixed_theta"] = {(*cfg.fixed_theta)[0], (*cfg.fixed_theta)[1]};
    return j;
}

struct RestoreOutput {
    std::vector<double> eap;
    json report;
    std::string marginals_csv;  // empty when not requested
};

RestoreOutput restore_inla(const GridGraph& g, const CountField& y, const Sidecar& meta,
                           const RestoreArgs& a) {
    const InlaConfig cfg = inla_config_of(a);
    const PoissonObs obs(y);
    const InlaEngine engine(g, obs, cfg);
    const InlaResult res = engine.run();

    RestoreOutput out;
    out.eap = res.marginals.eap;

    double mean_counts = 0.0, mean_eap = 0.0;
    for (std::size_t i = 0; i < out.eap.size(); ++i) {
        mean_counts += static_cast<double>(y.counts[i]);
        mean_eap += out.eap[i];
    }
    mean_counts /= static_cast<double>(out.eap.size());
    mean_eap /= static_cast<double>(out.eap.size());

    Vec2 hyper = res.mode ? res.mode->theta_star : res.points.front().theta;
    out.report = {
        {"schema", kReportSchema},
        {"library_version", kVersion},
        {"engine", "inla"},
        {"strategy", strategy_name(res.strategy)},
        {"point_count", res.points.size()},
        {"hyper_mode", {{"sigma2", hyper[0]}, {"d", hyper[1]}}},
        {"seed", meta.seed},
        {"rng", kRngName},
        // the zero-mean prior shrinks levels toward 0; surfaced, not corrected
        {"shrinkage", {{"mean_counts", mean_counts}, {"mean_eap", mean_eap}}},
        {"timings",
         {{"total_s", res.timings.total_seconds},
          {"mode_search_s", res.timings.mode_seconds},
          {"exploration_s", res.timings.explore_seconds},
          {"integration_s", res.timings.integrate_seconds}}},
        {"config", config_echo_inla(cfg)},
    };

    if (!a.marginal_pixels.empty()) {
        std::string csv = "pixel,abscissa,density\n";
        for (const index_t pix : a.marginal_pixels) {
            if (pix < 0 || pix >= g.n())
                throw InvalidConfig("marginal pixel index out of range");
            const double sd = std::sqrt(res.marginals.variance[pix]);
            const double lo = std::max(1e-9, res.marginals.eap[pix] - 5.0 * sd);
            const double hi = res.marginals.eap[pix] + 5.0 * sd;
            for (int k = 0; k < a.marginal_abscissae; ++k) {
                const double t =
                    lo + (hi - lo) * k / static_cast<double>(a.marginal_abscissae - 1);
                csv += std::to_string(pix) + "," + format_full(t) + "," +
                       format_full(res.marginals.density(pix, t)) + "\n";
            }
        }
        out.marginals_csv = std::move(csv);
    }
    return out;
}

RestoreOutput restore_mcmc(const GridGraph& g, const CountField& y, const Sidecar& meta,
                           const RestoreArgs& a) {
    ChainConfig cfg;
    cfg.steps = a.steps;
    cfg.burn_in = a.burn_in;
    cfg.step_size = a.step_size;
    cfg.seed = a.chain_seed;
    cfg.hist_bins = a.hist_bins;
    if (a.theta_mode == "fixed") cfg.theta_mode = ChainConfig::ThetaMode::fixed;
    else if (a.theta_mode == "sample") cfg.theta_mode = ChainConfig::ThetaMode::sample;
    else throw InvalidConfig("unknown theta mode: " + a.theta_mode);

    bool theta_from_inla = false;
    if (!a.theta.empty()) {
        if (a.theta.size() != 2) throw InvalidConfig("--theta needs two values");
        cfg.theta = {a.theta[0], a.theta[1]};
    } else {
        // default: fix theta at the INLA hyperparameter mode
        const PoissonObs obs(y);
        const InlaEngine engine(g, obs);
        cfg.theta = engine.find_mode().theta_star;
        theta_from_inla = true;
    }

    const double t0 = wall_seconds();
    const ChainSummary s = run_chain(g, y, cfg);
    const double elapsed = wall_seconds() - t0;

    RestoreOutput out;
    out.eap = eap_from_chain(s);
    out.report = {
        {"schema", kReportSchema},
        {"library_version", kVersion},
        {"engine", "mcmc"},
        {"sampler", "mala"},
        {"steps", cfg.steps},
        {"burn_in", cfg.burn_in},
        {"acceptance_rate", s.accept_rate},
        {"theta_mode", a.theta_mode},
        {"hyper_mode", {{"sigma2", cfg.theta[0]}, {"d", cfg.theta[1]}}},
        {"theta_from_inla_mode", theta_from_inla},
        {"seed", meta.seed},
        {"chain_seed", cfg.seed},
        {"rng", kRngName},
        {"timings", {{"total_s", elapsed}}},
        {"config",
         {{"steps", cfg.steps},
          {"burn_in", cfg.burn_in},
          {"step_size", cfg.step_size},
          {"theta_mode", a.theta_mode},
          {"theta", {cfg.theta[0], cfg.theta[1]}},
          {"hist_bins", cfg.hist_bins}}},
    };
    if (cfg.theta_mode == ChainConfig::ThetaMode::sample) {
        out.report["theta_posterior_mean"] = {{"sigma2", s.theta_mean[0]},
                                              {"d", s.theta_mean[1]}};
        out.report["theta_acceptance_rate"] = s.theta_accept_rate;
    }

    if (!a.marginal_pixels.empty()) {
        std::string csv = "pixel,bin_left,bin_right,count\n";
        for (const index_t pix : a.marginal_pixels) {
            if (pix < 0 || pix >= g.n())
                throw InvalidConfig("marginal pixel index out of range");
            for (std::size_t b = 0; b < s.hist_edges_count(); ++b) {
                csv += std::to_string(pix) + "," + format_full(s.hist_edges[b]) + "," +
                       format_full(s.hist_edges[b + 1]) + "," +
                       std::to_string(s.hist_count(pix, static_cast<int>(b))) + "\n";
            }
        }
        out.marginals_csv = std::move(csv);
    }
    return out;
}

int run_restore(const RestoreArgs& a) {
    const fs::path in_dir(a.input);
    const Sidecar meta = load_sidecar(in_dir);
    const CountField y = parse_counts_csv(read_text(in_dir / "counts.csv"));
    if (y.rows != meta.rows || y.cols != meta.cols)
        throw IoError("counts.csv shape disagrees with meta.json");
    const GridGraph g{y.rows, y.cols};

    RestoreOutput out;
    if (a.engine == "inla") out = restore_inla(g, y, meta, a);
    else if (a.engine == "mcmc") out = restore_mcmc(g, y, meta, a);
    else throw InvalidConfig("unknown engine: " + a.engine);

    StageDir stage(a.out);
    write_text(stage.path("eap.csv"), field_csv(out.eap, y.rows, y.cols));
    const PixelImage restored = intensity_inverse(out.eap, meta.transform, y.rows, y.cols);
    write_pgm_file(stage.path("restored.pgm"), restored);
    json meta_echo = load_json(in_dir / "meta.json");
    write_text(stage.path("meta.json"), meta_echo.dump(2) + "\n");
    write_text(stage.path("report.json"), out.report.dump(2) + "\n");
    if (!out.marginals_csv.empty())
        write_text(stage.path("marginals.csv"), out.marginals_csv);
    stage.commit();
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string original;
    std::string restored;
    std::string space = "auto";  // auto | latent | pixel
    std::string out;
};

json evaluate_to_json(const EvaluateArgs& a) {
    const PixelImage original = read_pgm_file(a.original);
    const fs::path restored_path(a.restored);
    const bool restored_is_dir = fs::is_directory(restored_path);

    std::string space = a.space;
    if (space == "auto")
        space = restored_is_dir && fs::exists(restored_path / "meta.json") ? "latent"
                                                                           : "pixel";
    MetricReport r;
    if (space == "latent") {
        if (!restored_is_dir)
            throw InvalidConfig("latent-space evaluation needs a restore directory");
        const Sidecar meta = load_sidecar(restored_path);
        if (original.rows != meta.rows || original.cols != meta.cols)
            throw DimensionMismatch("original image shape disagrees with the sidecar");
        std::vector<double> g(original.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = meta.transform.forward(original.pixels[i]);
        const std::vector<double> h = parse_field_csv(
            read_text(restored_path / "eap.csv"), meta.rows, meta.cols);
        r = compute_metrics(g, h);
    } else if (space == "pixel") {
        const PixelImage restored =
            restored_is_dir ? read_pgm_file(restored_path / "restored.pgm")
                            : read_pgm_file(restored_path);
        if (original.rows != restored.rows || original.cols != restored.cols)
            throw DimensionMismatch("image shapes differ");
        r = compute_metrics(original.pixels, restored.pixels);
    } else {
        throw InvalidConfig("unknown metric space: " + space);
    }
    return metrics_json(r, space);
}

int run_evaluate(const EvaluateArgs& a) {
    const json report = evaluate_to_json(a);
    std::cout << report.dump(2) << "\n";
    if (!a.out.empty()) {
        const fs::path out_path(a.out);
        if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
        write_text(out_path, report.dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// pipeline

int run_pipeline(const std::string& config_path) {
    const json cfg = load_json(config_path);
    std::string input, out_dir;
    double lmin, lmax;
    std::uint64_t seed;
    try {
        input = cfg.at("input").get<std::string>();
        out_dir = cfg.at("out").get<std::string>();
        lmin = cfg.value("lambda_min", 2.0);
        lmax = cfg.value("lambda_max", 25.0);
        seed = cfg.value("seed", std::uint64_t{0});
        if (!cfg.contains("engines") || !cfg["engines"].is_array() ||
            cfg["engines"].empty())
            throw InvalidConfig("pipeline config needs a non-empty engines array");
    } catch (const json::exception& e) {
        throw InvalidConfig("pipeline config is missing keys: " + std::string(e.what()));
    }

    CorruptArgs corrupt;
    corrupt.input = input;
    corrupt.out = (fs::path(out_dir) / "noisy").string();
    corrupt.lmin = lmin;
    corrupt.lmax = lmax;
    corrupt.seed = seed;
    corrupt.crop = cfg.value("crop", 0);
    run_corrupt(corrupt);

    json table = json::array();
    int first_failure = 0;
    for (const json& spec : cfg["engines"]) {
        RestoreArgs r;
        r.engine = spec.value("engine", "inla");
        r.strategy = spec.value("strategy", "ccd");
        r.steps = spec.value("steps", std::int64_t{2000});
        r.burn_in = spec.value("burn_in", std::int64_t{1000});
        r.chain_seed = spec.value("chain_seed", std::uint64_t{0});
        r.step_size = spec.value("step_size", 0.25);
        r.theta_mode = spec.value("theta_mode", "fixed");
        if (spec.contains("theta")) r.theta = spec["theta"].get<std::vector<double>>();
        r.delta_z = spec.value("delta_z", 1.0);
        r.delta_pi = spec.value("delta_pi", 2.5);
        r.f0 = spec.value("f0", std::numbers::sqrt2);
        r.workers = spec.value("workers", 0);
        const std::string tag =
            r.engine == "inla" ? r.engine + "-" + r.strategy : r.engine;
        r.input = corrupt.out;
        r.out = (fs::path(out_dir) / tag).string();

        json row = {{"engine", r.engine},
                    {"strategy", r.engine == "inla" ? json(r.strategy) : json(nullptr)},
                    {"tag", tag}};
        try {
            const double t0 = wall_seconds();
            run_restore(r);
            row["time_s"] = wall_seconds() - t0;
            EvaluateArgs e;
            e.original = input;
            e.restored = r.out;
            e.space = "latent";
            const json m = evaluate_to_json(e);
            row["metrics"] = m;
            row["psnr"] = m["psnr"];
            row["ssim"] = m["ssim"];
            row["mse"] = m["mse"];
        } catch (const Error& e) {
            // a stage failure halts later stages for this engine only
            row["error"] = e.what();
            if (first_failure == 0) first_failure = exit_code_of(e);
        }
        table.push_back(row);
    }

    StageDir stage(out_dir);
    std::string csv = "engine,strategy,psnr,ssim,mse,time_s\n";
    for (const auto& row : table) {
        if (row.contains("error")) continue;
        const json& p = row["psnr"];
        csv += row["engine"].get<std::string>() + "," +
               (row["strategy"].is_null() ? "" : row["strategy"].get<std::string>()) +
               "," + (p.is_string() ? p.get<std::string>() : format_full(p.get<double>())) +
               "," + format_full(row["ssim"].get<double>()) + "," +
               format_full(row["mse"].get<double>()) + "," +
               format_full(row["time_s"].get<double>()) + "\n";
    }
    write_text(stage.path("table.csv"), csv);
    const json combined = {{"schema", "pixinla-table-v1"},
                           {"seed", seed},
                           {"library_version", kVersion},
                           {"rows", table}};
    write_text(stage.path("table.json"), combined.dump(2) + "\n");
    stage.commit();
    return first_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian restoration of Poisson-corrupted images on an ICAR lattice"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CorruptArgs ca;
    CLI::App* corrupt = app.add_subcommand(
        "corrupt", "Contrast-stretch an image to photon rates and draw Poisson counts");
    corrupt->add_option("--in", ca.input, "input PGM image")->required();
    corrupt->add_option("--out", ca.out, "output directory")->required();
    corrupt->add_option("--lmin", ca.lmin, "lambda_min target rate");
    corrupt->add_option("--lmax", ca.lmax, "lambda_max target rate");
    corrupt->add_option("--seed", ca.seed, "corruption seed")->required();
    corrupt->add_option("--crop", ca.crop, "center-crop to this square size first");

    RestoreArgs ra;
    CLI::App* restore = app.add_subcommand(
        "restore", "Restore a corrupted image (INLA engine or MALA baseline)");
    restore->add_option("--in", ra.input, "directory produced by corrupt")->required();
    restore->add_option("--out", ra.out, "output directory")->required();
    restore->add_option("--engine", ra.engine, "inla | mcmc");
    restore->add_option("--strategy", ra.strategy, "inla: ccd | grid | fixed");
    restore->add_option("--delta-z", ra.delta_z, "grid walk step in z space");
    restore->add_option("--delta-pi", ra.delta_pi, "grid log-posterior drop");
    restore->add_option("--f0", ra.f0, "CCD scale (> 1)");
    restore->add_option("--theta-init", ra.theta_init, "mode search start (sigma2 d)")
        ->expected(2);
    restore->add_option("--fixed-theta", ra.fixed_theta,
                        "single-point debug shortcut (sigma2 d)")
        ->expected(2);
    restore->add_option("--mode-grad-tol", ra.mode_grad_tol, "mode search tolerance");
    restore->add_option("--newton-grad-tol", ra.newton_grad_tol, "inner Newton tolerance");
    restore->add_option("--workers", ra.workers, "parallel theta evaluations (0 = auto)");
    restore->add_option("--max-points", ra.max_points, "grid exploration budget");
    restore->add_option("--steps", ra.steps, "mcmc: total steps");
    restore->add_option("--burnin", ra.burn_in, "mcmc: burn-in steps");
    restore->add_option("--step-size", ra.step_size, "mcmc: initial MALA step");
    restore->add_option("--chain-seed", ra.chain_seed, "mcmc: chain seed");
    restore->add_option("--theta-mode", ra.theta_mode, "mcmc: fixed | sample");
    restore->add_option("--theta", ra.theta,
                        "mcmc theta (sigma2 d); default: INLA hyper mode")
        ->expected(2);
    restore->add_option("--hist-bins", ra.hist_bins, "mcmc histogram bins");
    restore->add_option("--marginal-pixels", ra.marginal_pixels,
                        "pixel indices whose marginals are dumped");
    restore->add_option("--marginal-abscissae", ra.marginal_abscissae,
                        "abscissae per dumped INLA marginal");

    EvaluateArgs ea;
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "PSNR / SSIM / MSE between two images");
    evaluate->add_option("--original", ea.original, "ground-truth PGM")->required();
    evaluate->add_option("--restored", ea.restored, "restore directory or PGM")
        ->required();
    evaluate->add_option("--space", ea.space, "auto | latent | pixel");
    evaluate->add_option("--out", ea.out, "also write the report here");

    std::string pipeline_config;
    CLI::App* pipeline = app.add_subcommand(
        "pipeline", "corrupt -> restore (each engine) -> evaluate, with a summary table");
    pipeline->add_option("--config", pipeline_config, "pipeline JSON config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*corrupt) return run_corrupt(ca);
        if (*restore) return run_restore(ra);
        if (*evaluate) return run_evaluate(ea);
        if (*pipeline) return run_pipeline(pipeline_config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_of(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
