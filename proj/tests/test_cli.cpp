// Drives the installed CLI binary end to end through a shell, checking the
// file contracts, exit codes, atomicity and determinism.

#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "pixinla/imaging.hpp"

#ifndef PIXINLA_CLI_PATH
#error "PIXINLA_CLI_PATH must point at the pixinla binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(PIXINLA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path make_workdir() {
    const fs::path dir =
        fs::temp_directory_path() / ("pixinla-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_sinusoid_pgm(const fs::path& p, int n) {
    pixinla::PixelImage img;
    img.rows = n;
    img.cols = n;
    img.pixels.resize(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            img.pixels[static_cast<std::size_t>(r) * n + c] =
                128.0 + 90.0 * std::sin(2.0 * std::numbers::pi * r / n) *
                            std::cos(2.0 * std::numbers::pi * c / n);
    pixinla::write_pgm_file(p, img);
}

// Structural validation against the subset of JSON Schema the shipped schema
// uses: type, const, enum, required, properties, anyOf, allOf + if/then.
bool check_schema(const json& schema, const json& value);

bool check_type(const std::string& t, const json& v) {
    if (t == "object") return v.is_object();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "array") return v.is_array();
    return false;
}

bool check_schema(const json& schema, const json& value) {
    if (schema.contains("const") && value != schema["const"]) return false;
    if (schema.contains("enum")) {
        bool hit = false;
        for (const auto& e : schema["enum"]) hit = hit || value == e;
        if (!hit) return false;
    }
    if (schema.contains("type") && !check_type(schema["type"].get<std::string>(), value))
        return false;
    if (schema.contains("minimum") && value.is_number() &&
        value.get<double>() < schema["minimum"].get<double>())
        return false;
    if (schema.contains("maximum") && value.is_number() &&
        value.get<double>() > schema["maximum"].get<double>())
        return false;
    if (schema.contains("exclusiveMinimum") && value.is_number() &&
        !(value.get<double>() > schema["exclusiveMinimum"].get<double>()))
        return false;
    if (schema.contains("required")) {
        for (const auto& key : schema["required"])
            if (!value.contains(key.get<std::string>())) return false;
    }
    if (schema.contains("properties") && value.is_object()) {
        for (const auto& [key, sub] : schema["properties"].items())
            if (value.contains(key) && !check_schema(sub, value[key])) return false;
    }
    if (schema.contains("anyOf")) {
        bool hit = false;
        for (const auto& sub : schema["anyOf"]) hit = hit || check_schema(sub, value);
        if (!hit) return false;
    }
    if (schema.contains("allOf")) {
        for (const auto& clause : schema["allOf"]) {
            if (clause.contains("if")) {
                if (check_schema(clause["if"], value) && clause.contains("then") &&
                    !check_schema(clause["then"], value))
                    return false;
            } else if (!check_schema(clause, value)) {
                return false;
            }
        }
    }
    return true;
}

json strip_timings(json j) {
    j.erase("timings");
    return j;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full command workflow") {
    const fs::path dir = make_workdir();
    const fs::path img = dir / "orig.pgm";
    write_sinusoid_pgm(img, 16);

    SUBCASE("corrupt writes counts, view and sidecar; reruns are identical") {
        REQUIRE(run_cli("corrupt --in " + img.string() + " --lmin 2 --lmax 25 --seed 7 --out " +
                        (dir / "noisy").string()) == 0);
        CHECK(fs::exists(dir / "noisy/counts.csv"));
        CHECK(fs::exists(dir / "noisy/view.pgm"));
        CHECK(fs::exists(dir / "noisy/meta.json"));
        const std::string first = slurp(dir / "noisy/counts.csv");
        REQUIRE(run_cli("corrupt --in " + img.string() + " --lmin 2 --lmax 25 --seed 7 --out " +
                        (dir / "noisy2").string()) == 0);
        CHECK(first == slurp(dir / "noisy2/counts.csv"));

        const json meta = json::parse(slurp(dir / "noisy/meta.json"));
        CHECK(meta["seed"] == 7);
        CHECK(meta["lambda_min"] == 2.0);
        CHECK(meta["lambda_max"] == 25.0);
        CHECK(meta.contains("i_min"));
        CHECK(meta.contains("i_max"));
    }

    SUBCASE("invalid contrast parameters fail fast with exit 2") {
        CHECK(run_cli("corrupt --in " + img.string() + " --lmin 25 --lmax 2 --seed 1 --out " +
                      (dir / "bad").string()) == 2);
        CHECK_FALSE(fs::exists(dir / "bad/counts.csv"));
        CHECK_FALSE(fs::exists(dir / "bad/meta.json"));
    }

    SUBCASE("restore with both engines, then evaluate") {
        REQUIRE(run_cli("corrupt --in " + img.string() + " --lmin 2 --lmax 25 --seed 7 --out " +
                        (dir / "noisy").string()) == 0);

        REQUIRE(run_cli("restore --engine inla --strategy ccd --in " +
                        (dir / "noisy").string() + " --out " + (dir / "ri").string() +
                        " --marginal-pixels 0 --marginal-pixels 9") == 0);
        CHECK(fs::exists(dir / "ri/restored.pgm"));
        CHECK(fs::exists(dir / "ri/eap.csv"));
        const json report = json::parse(slurp(dir / "ri/report.json"));
        CHECK(report["engine"] == "inla");
        CHECK(report["strategy"] == "ccd");
        CHECK(report["point_count"] == 9);
        const std::string marg = slurp(dir / "ri/marginals.csv");
        CHECK(marg.rfind("pixel,abscissa,density", 0) == 0);

        const json schema = json::parse(
            slurp(fs::path(PIXINLA_SOURCE_DIR) / "schemas/report-v1.schema.json"));
        CHECK(check_schema(schema, report));
        json broken = report;
        broken.erase("point_count");
        CHECK_FALSE(check_schema(schema, broken));

        REQUIRE(run_cli("restore --engine mcmc --steps 2000 --burnin 1000 --chain-seed 3"
                        " --theta 2.0 0.05 --in " +
                        (dir / "noisy").string() + " --out " + (dir / "rm").string() +
                        " --marginal-pixels 4") == 0);
        const json mreport = json::parse(slurp(dir / "rm/report.json"));
        CHECK(mreport["engine"] == "mcmc");
        CHECK(mreport["sampler"] == "mala");
        CHECK(mreport["steps"] == 2000);
        CHECK(mreport["burn_in"] == 1000);
        CHECK(check_schema(schema, mreport));
        const std::string mhist = slurp(dir / "rm/marginals.csv");
        CHECK(mhist.rfind("pixel,bin_left,bin_right,count", 0) == 0);

        // identical inputs evaluate to the exact-match sentinel values
        REQUIRE(run_cli("evaluate --original " + img.string() + " --restored " +
                        img.string() + " --out " + (dir / "self.json").string()) == 0);
        const json self = json::parse(slurp(dir / "self.json"));
        CHECK(self["mse"] == 0.0);
        CHECK(self["psnr"] == "inf");
        CHECK(self["ssim"] == 1.0);
        CHECK(self["space"] == "pixel");

        // restored output evaluates in latent space and beats the raw counts
        REQUIRE(run_cli("evaluate --original " + img.string() + " --restored " +
                        (dir / "ri").string() + " --out " + (dir / "eval.json").string()) == 0);
        const json eval = json::parse(slurp(dir / "eval.json"));
        CHECK(eval["space"] == "latent");
        CHECK(eval["ssim"].get<double>() < 1.0);
        CHECK(eval["psnr"].is_number());
    }

    SUBCASE("restore without the sidecar writes nothing") {
        fs::create_directories(dir / "empty");
        CHECK(run_cli("restore --engine inla --in " + (dir / "empty").string() +
                      " --out " + (dir / "rfail").string()) == 4);
        CHECK_FALSE(fs::exists(dir / "rfail/report.json"));
        CHECK_FALSE(fs::exists(dir / "rfail/eap.csv"));
    }

    SUBCASE("pipeline emits one table row per engine, deterministically") {
        const json cfg = {
            {"input", img.string()},
            {"out", (dir / "run").string()},
            {"lambda_min", 2.0},
            {"lambda_max", 25.0},
            {"seed", 11},
            {"engines",
             {{{"engine", "inla"}, {"strategy", "ccd"}},
              {{"engine", "inla"}, {"strategy", "grid"}},
              {{"engine", "mcmc"}, {"steps", 2000}, {"burn_in", 1000}, {"chain_seed", 5}}}},
        };
        std::ofstream(dir / "pipe.json") << cfg.dump();
        REQUIRE(run_cli("pipeline --config " + (dir / "pipe.json").string()) == 0);
        const std::string table = slurp(dir / "run/table.csv");
        CHECK(std::count(table.begin(), table.end(), '\n') == 4);  // header + 3 rows
        const json combined = json::parse(slurp(dir / "run/table.json"));
        REQUIRE(combined["rows"].size() == 3);
        CHECK(combined["rows"][0]["tag"] == "inla-ccd");
        CHECK(combined["rows"][1]["tag"] == "inla-grid");
        CHECK(combined["rows"][2]["tag"] == "mcmc");

        // rerun into a second directory: non-timing outputs are bit-identical
        json cfg2 = cfg;
        cfg2["out"] = (dir / "run2").string();
        std::ofstream(dir / "pipe2.json") << cfg2.dump();
        REQUIRE(run_cli("pipeline --config " + (dir / "pipe2.json").string()) == 0);
        CHECK(slurp(dir / "run/noisy/counts.csv") == slurp(dir / "run2/noisy/counts.csv"));
        for (const char* tag : {"inla-ccd", "inla-grid", "mcmc"}) {
            CHECK(slurp(dir / "run" / tag / "eap.csv") ==
                  slurp(dir / "run2" / tag / "eap.csv"));
            const json a = json::parse(slurp(dir / "run" / tag / "report.json"));
            const json b = json::parse(slurp(dir / "run2" / tag / "report.json"));
            CHECK(strip_timings(a) == strip_timings(b));
        }
        const json c1 = json::parse(slurp(dir / "run/table.json"));
        const json c2 = json::parse(slurp(dir / "run2/table.json"));
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(c1["rows"][k]["metrics"] == c2["rows"][k]["metrics"]);
        }
    }

    fs::remove_all(dir);
}

}  // TEST_SUITE
