#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dspec/config.hpp"
#include "dspec/criteria.hpp"
#include "dspec/eigensolver.hpp"
#include "dspec/errors.hpp"
#include "dspec/forms.hpp"
#include "dspec/neumann.hpp"
#include "dspec/parallel.hpp"
#include "dspec/report.hpp"
#include "dspec/scenarios.hpp"

using namespace dspec;
namespace fs = std::filesystem;

namespace {

// Diagnostics go to stderr, one JSON object per line.
void diagnostic(const std::string& level, const std::string& code, const std::string& message,
                const json& extra = nullptr)
{
    json j = {{"level", level}, {"code", code}, {"message", message}};
    if (!extra.is_null())
        j["data"] = extra;
    std::cerr << j.dump() << "\n";
}

int exit_code(ErrorKind k)
{
    switch (k) {
    case ErrorKind::Invalid:
    case ErrorKind::Usage:
        return 2;
    case ErrorKind::Numerical:
        return 3;
    case ErrorKind::Undecidable:
        return 4;
    }
    return 1;
}

std::string kind_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::Invalid:
        return "invalid";
    case ErrorKind::Usage:
        return "usage";
    case ErrorKind::Numerical:
        return "numerical";
    case ErrorKind::Undecidable:
        return "undecidable";
    }
    return "internal";
}

[[noreturn]] void usage(const std::string& message)
{
    fail(ErrorKind::Usage, "Usage", message);
}

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = item == "inf" ? kInf : item == "-inf" ? -kInf : std::stod(item, &used);
            if (item != "inf" && item != "-inf" && used != item.size())
                throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            usage(what + ": cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        invalid("OutputError", "cannot write " + path.string());
    out << content;
}

std::string pretty(const json& j)
{
    return j.dump(2) + "\n";
}

// Truncation at the largest k with x_k <= xmax.  Generated partitions are extended on demand.
OperatorSpec truncate_at(const std::string& config_path, double xmax, int& K)
{
    json cfg = load_config_file(config_path);
    OperatorSpec spec = spec_from_config(cfg);
    if (!std::isfinite(xmax)) {
        K = spec.K();
        return spec;
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(xmax));
    if (spec.partition_extends()) {
        constexpr long long kMaxCells = 1000000;
        long long k = 0;
        while (k < kMaxCells && spec.x_any(k + 1) <= xmax + slack)
            ++k;
        if (k >= kMaxCells)
            invalid("TooLarge", "xmax needs more than " + std::to_string(kMaxCells) + " cells");
        if (k > spec.K()) {
            cfg["partition"]["generator"]["count"] = k;
            spec = spec_from_config(cfg);
        }
        K = static_cast<int>(k);
    } else {
        if (xmax > spec.x(spec.K()) + slack)
            invalid("TruncationBeyondData", "xmax exceeds the last partition point x_K = " +
                                                format_double(spec.x(spec.K())) + " and no generator is given");
        K = 0;
        while (K < spec.K() && spec.x(K + 1) <= xmax + slack)
            ++K;
    }
    if (K < 1)
        invalid("TruncationBeyondData", "xmax lies before the first partition point");
    return spec;
}

json cross_validation_json(const TruncatedProblem& problem, const std::vector<SpectralResult>& results,
                           const Window& w, double galerkin_h, const ShootingOptions& so)
{
    json engines = json::object();
    for (const SpectralResult& r : results)
        engines[r.method] = spectral_json(r);
    long long n_shoot = shooting_count(problem, w.hi, so) - shooting_count(problem, w.lo, so);
    long long n_gal = galerkin_count(problem, galerkin_h, w.hi) - galerkin_count(problem, galerkin_h, w.lo);
    long long n_orc = static_cast<long long>(results[2].eigenvalues.size());
    json rows = json::array();
    double worst = 0;
    std::size_t n = std::min({results[0].eigenvalues.size(), results[1].eigenvalues.size(),
                              results[2].eigenvalues.size()});
    for (std::size_t i = 0; i < n; ++i) {
        json row = {{"index", static_cast<long long>(i)}};
        double ref = results[0].eigenvalues[i], d = 0;
        for (const SpectralResult& r : results) {
            row[r.method] = num(r.eigenvalues[i], r.errors[i]);
            d = std::max(d, std::abs(r.eigenvalues[i] - ref) / std::max(1.0, std::abs(ref)));
        }
        row["max_rel_discrepancy"] = num(d);
        worst = std::max(worst, d);
        rows.push_back(row);
    }
    return {{"window", {{"lo", num(w.lo)}, {"hi", num(w.hi)}}},
            {"engines", engines},
            {"rows", rows},
            {"counts", {{"shooting", n_shoot}, {"galerkin", n_gal}, {"oracle", n_orc}}},
            {"counts_agree", n_shoot == n_gal && n_gal == n_orc},
            {"worst_relative", num(worst)}};
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral analysis of Schrodinger operators with delta-prime interactions on the half-line", "dspec"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    int jobs = default_jobs();
    app.add_option("--jobs", jobs, "worker threads (default: DSPEC_JOBS or 1)")->check(CLI::PositiveNumber);
    app.fallthrough();

    std::string config;

    // check
    auto* check = app.add_subcommand("check", "evaluate the semiboundedness, discreteness and spectrum criteria");
    double C = 1;
    bool as_json = false;
    std::string eps_text;
    check->add_option("config", config, "configuration file (JSON or TOML)")->required();
    check->add_option("--C", C, "constant in the necessary conditions for semiboundedness");
    check->add_option("--eps", eps_text, "comma-separated window widths for the Molchanov-type condition");
    check->add_flag("--json", as_json, "emit JSON instead of text");

    // form
    auto* form = app.add_subcommand("form", "evaluate the quadratic form on a test function");
    std::string test_fn = "indicator", amps;
    TestFunctionParams tp;
    form->add_option("config", config)->required();
    form->add_option("--test-fn", test_fn, "indicator | tent | step | ramp")
        ->check(CLI::IsMember({"indicator", "tent", "step", "ramp"}));
    form->add_option("--k", tp.k, "cell or point index");
    form->add_option("--j", tp.j, "step end index");
    form->add_option("--width", tp.width, "tent support length");
    form->add_option("--a", amps, "ramp amplitudes a_1,...,a_n");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of the truncated operator in a window");
    double xmax = kInf, tol = 1e-10, h = 0;
    std::string bc = "neumann", window_text, engine = "shooting", report_path;
    spectrum->add_option("config", config)->required();
    spectrum->add_option("--xmax", xmax, "truncate at the last partition point <= xmax (default: all points)");
    spectrum->add_option("--bc", bc, "right boundary condition")->check(CLI::IsMember({"neumann", "dirichlet"}));
    spectrum->add_option("--window", window_text, "lo,hi")->required();
    spectrum->add_option("--tol", tol, "eigenvalue tolerance for the shooting engine")->check(CLI::PositiveNumber);
    spectrum->add_option("--engine", engine)->check(CLI::IsMember({"shooting", "galerkin", "oracle", "all"}));
    spectrum->add_option("--mesh", h, "mesh width for the galerkin and oracle engines")->check(CLI::PositiveNumber);
    spectrum->add_option("--report", report_path, "write the cross-validation report of --engine all here");

    // neumann
    auto* neumann = app.add_subcommand("neumann", "spectrum of the decoupled Neumann direct sum");
    double lambda_max = 0;
    neumann->add_option("config", config)->required();
    neumann->add_option("--lambda-max", lambda_max)->required();

    // ess
    auto* ess = app.add_subcommand("ess", "predicted essential spectrum");
    ess->add_option("config", config)->required();
    ess->add_option("--lambda-max", lambda_max)->required();

    // scenario
    auto* scenario = app.add_subcommand("scenario", "run a packaged example");
    std::string scenario_name, out_dir;
    std::vector<std::string> params;
    scenario->add_option("name", scenario_name)->required()->check(CLI::IsMember(scenario_names()));
    scenario->add_option("--param", params, "k=v (repeatable)");
    scenario->add_option("--out", out_dir, "directory for report.json, config.json, rung CSVs and manifest.json");

    // oracle-compare
    auto* compare = app.add_subcommand("oracle-compare", "compare the lowest eigenvalues from all three engines");
    long long seed = -1;
    int count = 8, max_cells = 6;
    compare->add_option("config", config);
    compare->add_option("--random", seed, "use a random small instance with this seed")->check(CLI::NonNegativeNumber);
    compare->add_option("--count", count, "number of lowest eigenvalues")->check(CLI::PositiveNumber);
    compare->add_option("--max-cells", max_cells, "cells in random instances")->check(CLI::Range(2, 50));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        diagnostic("error", "Usage", e.what());
        return 2;
    }

    try {
        if (*check) {
            OperatorSpec spec = load_spec(config);
            std::vector<double> eps = eps_text.empty() ? kDefaultEpsilons : parse_list(eps_text, "--eps");
            CriterionReport r = theorem_verdicts(spec, C, eps);
            std::cout << (as_json ? pretty(criterion_report_json(r)) : criterion_report_text(r));
        } else if (*form) {
            OperatorSpec spec = load_spec(config);
            if (!amps.empty())
                tp.a = parse_list(amps, "--a");
            PiecewiseFunction f = make_test_function(spec, test_fn, tp);
            FormBreakdown b = form_energy(spec, f);
            json out = {{"test_function", test_fn}, {"support", {num(f.support_lo), num(f.support_hi)}}};
            out["form"] = form_json(b, b.norm2 > 0 ? b.total / b.norm2 : kInf);
            std::cout << pretty(out);
        } else if (*spectrum) {
            std::vector<double> wv = parse_list(window_text, "--window");
            if (wv.size() != 2)
                usage("--window expects lo,hi");
            Window w{wv[0], wv[1]};
            int K = 0;
            OperatorSpec spec = truncate_at(config, xmax, K);
            TruncatedProblem problem = make_problem(
                spec, bc == "dirichlet" ? BoundaryCondition::Dirichlet : BoundaryCondition::Neumann, K);
            ShootingOptions so;
            so.tol = tol;
            so.jobs = jobs;
            GalerkinOptions go;
            if (h > 0)
                go.h = h;
            OracleOptions oo;
            if (h > 0)
                oo.h = h;
            std::vector<SpectralResult> results;
            if (engine == "shooting" || engine == "all")
                results.push_back(eigenvalues_shooting(problem, w, so));
            if (engine == "galerkin" || engine == "all")
                results.push_back(galerkin_extrapolated(problem, w, go));
            if (engine == "oracle" || engine == "all")
                results.push_back(dense_oracle(problem, w, oo));
            std::cout << spectrum_csv(results);
            if (engine == "all") {
                double finest = go.h / std::pow(2.0, go.levels - 1);
                json cv = cross_validation_json(problem, results, w, finest, so);
                cv["K"] = K;
                cv["config_hash"] = config_hash(spec.config());
                if (!report_path.empty())
                    write_file(report_path, pretty(cv));
                else
                    diagnostic("info", "CrossValidation", "engine cross-validation", cv);
                if (!cv["counts_agree"].get<bool>())
                    numerical("InconsistentCount", "engines disagree on the number of eigenvalues in the window");
            }
        } else if (*neumann) {
            OperatorSpec spec = load_spec(config);
            std::cout << direct_sum_csv(direct_sum_spectrum(spec, lambda_max, jobs));
        } else if (*ess) {
            OperatorSpec spec = load_spec(config);
            json out = ess_json(predict_ess(spec, lambda_max));
            out["lambda_max"] = num(lambda_max);
            std::cout << pretty(out);
        } else if (*scenario) {
            long long started = manifest_clock();
            std::map<std::string, std::string> kv;
            for (const std::string& p : params) {
                auto eq = p.find('=');
                if (eq == std::string::npos || eq == 0)
                    usage("--param expects key=value, got '" + p + "'");
                kv[p.substr(0, eq)] = p.substr(eq + 1);
            }
            ScenarioReport r = run_scenario(scenario_name, kv, jobs);
            json report = scenario_json(r);
            std::cout << pretty(report);
            if (!out_dir.empty()) {
                fs::create_directories(out_dir);
                RunManifest m;
                m.command = "scenario " + scenario_name;
                m.config_hash = config_hash(r.config);
                m.parameters = {{"scenario", scenario_name}, {"params", kv}};
                auto emit = [&](const std::string& name, const std::string& content) {
                    write_file(fs::path(out_dir) / name, content);
                    m.outputs.push_back(name);
                };
                emit("report.json", pretty(report));
                emit("config.json", pretty(r.config));
                for (std::size_t i = 0; i < r.rungs.size(); ++i) {
                    std::string label = r.rungs[i].label.empty() ? std::to_string(i) : r.rungs[i].label;
                    std::replace_if(label.begin(), label.end(), [](char c) { return !std::isalnum(c) && c != '_' && c != '-' && c != '.'; }, '_');
                    emit("rung_" + label + ".csv", spectrum_csv({r.rungs[i].spectrum}));
                }
                m.outputs.push_back("manifest.json");
                write_file(fs::path(out_dir) / "manifest.json", pretty(manifest_json(m, started, manifest_clock())));
            }
            if (!r.passed())
                diagnostic("warning", "ScenarioMismatch", "scenario '" + scenario_name + "' did not reproduce the expected pattern");
        } else if (*compare) {
            OperatorSpec spec;
            if (seed >= 0) {
                if (!config.empty())
                    usage("give either a config or --random, not both");
                spec = random_small_spec(static_cast<std::uint64_t>(seed), max_cells);
            } else if (!config.empty()) {
                spec = load_spec(config);
            } else {
                usage("oracle-compare needs a config or --random <seed>");
            }
            ShootingOptions so;
            so.jobs = jobs;
            EngineComparison c = compare_engines(make_problem(spec), count, so);
            json out = engine_comparison_json(c, count);
            out["K"] = spec.K();
            if (seed >= 0)
                out["seed"] = seed;
            std::cout << pretty(out);
            if (!c.counts_agree())
                numerical("InconsistentCount", "engines disagree on the number of eigenvalues below the window top");
        }
    } catch (const Error& e) {
        diagnostic("error", e.code(), e.what(), {{"kind", kind_name(e.kind())}});
        return exit_code(e.kind());
    } catch (const json::exception& e) {
        diagnostic("error", "InvalidConfig", e.what(), {{"kind", "invalid"}});
        return 2;
    } catch (const std::exception& e) {
        diagnostic("error", "Internal", e.what(), {{"kind", "internal"}});
        return 1;
    }
    return 0;
}
