// nmsim command-line driver: run, sweep, divisibility, oracle-check, fit.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nmsim/errors.hpp"
#include "nmsim/experiment.hpp"

namespace fs = std::filesystem;
using namespace nmsim;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3, kCheckFailed = 4 };

struct Common {
    std::string config;
    std::string out;
    std::optional<double> kappa;
    std::optional<double> threshold;
    unsigned workers = 0;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.kappa) {
        cfg.noise.kappa = *c.kappa;
        validate_config(cfg);
    }
    if (c.threshold) cfg.analysis.revival_threshold = *c.threshold;
    return cfg;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) {
    return c.out.empty() ? fs::path(cfg.output.directory) : fs::path(c.out);
}

int cmd_run(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const RunResult result = run_experiment(cfg);
    const fs::path dir = out_dir(c, cfg);
    write_run_artifacts(cfg, result, dir);
    for (const auto& a : result.analysis) {
        std::printf("%-16s final E=%.6g", a.label.c_str(),
                    result.trajectory.observables.at(a.label).back());
        if (a.saturation) {
            std::printf("  saturated=%s value=%.6g", a.saturation->saturated ? "yes" : "no",
                        a.saturation->value);
        }
        std::printf("  revivals=%zu\n", a.revival.events.size());
    }
    std::printf("wrote %s\n", dir.string().c_str());
    return kOk;
}

int cmd_sweep(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const auto cells = run_sweep(cfg, c.workers);
    const fs::path dir = out_dir(c, cfg);
    write_sweep_summary(cells, dir / "summary.csv");
    write_json(Json{{"config", config_to_json(cfg)}}, dir / "sweep_metadata.json");
    std::size_t failed = 0;
    for (const auto& cell : cells) failed += cell.status != "ok";
    std::printf("%zu cells, %zu failed; wrote %s\n", cells.size(), failed,
                (dir / "summary.csv").string().c_str());
    return kOk;
}

int cmd_divisibility(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const DivisibilityVerdict v = divisibility_report(cfg);
    std::printf("verdict: %s\nmin margin: %.6g\n", to_string(v.verdict).c_str(), v.min_margin);
    for (const auto& w : v.violation_windows) {
        std::printf("violation: [%.6g, %.6g]\n", w.start, w.end);
    }
    if (!c.out.empty()) write_json(divisibility_to_json(v), fs::path(c.out) / "divisibility.json");
    return kOk;
}

int cmd_oracle(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const OracleReport r = oracle_check(cfg);
    std::printf("max deviation %.3e at t=%.6g over %zu samples (bound %.1e): %s\n", r.max_deviation,
                r.worst_t, r.samples, r.bound, r.pass ? "PASS" : "FAIL");
    if (!c.out.empty()) write_json(oracle_to_json(r), fs::path(c.out) / "oracle.json");
    return r.pass ? kOk : kCheckFailed;
}

int cmd_fit(const Common& c, const std::string& summary, const std::string& model,
            const std::string& parity) {
    FitModel m;
    try {
        m = fit_model_from_string(model);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const double threshold = c.threshold.value_or(1e-3);
    const auto records = fit_sweep(read_sweep_summary(summary), m, parity_from_string(parity));
    const fs::path dir = c.out.empty() ? fs::path(summary).parent_path() : fs::path(c.out);
    write_json(fit_records_to_json(records, threshold), dir / "fits.json");
    write_fit_csv(records, threshold, dir / "fits.csv");
    int status = kOk;
    for (const auto& r : records) {
        std::printf("%s s=%s %s: %s", to_string(r.family).c_str(),
                    std::isnan(r.s) ? "-" : format_double(r.s).c_str(), r.cut.c_str(),
                    r.status.c_str());
        if (r.fit) {
            std::printf("  a=%.6g b=%.6g c=%.6g rms=%.3g", r.fit->a, r.fit->b, r.fit->c,
                        r.fit->residual);
        }
        std::printf("\n");
        if (r.status.rfind("fit-failure", 0) == 0) status = kNumerical;
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiqubit entanglement under time-dependent local noise"};
    app.require_subcommand(1);

    Common common;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "Experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "Output directory (overrides output.directory)");
        sub->add_option("--kappa", common.kappa, "Master-equation prefactor convention")
            ->check(CLI::IsMember({1.0, 0.25}));
    };

    auto* run = app.add_subcommand("run", "Evolve one trajectory and analyse it");
    add_config(run);
    run->add_option("--threshold", common.threshold, "Revival threshold in ebits");

    auto* sweep = app.add_subcommand("sweep", "Run the Cartesian product of the sweep axes");
    add_config(sweep);
    sweep->add_option("--workers", common.workers, "Worker threads (default: all cores)");

    auto* div = app.add_subcommand("divisibility", "Classify CP/P divisibility of the rates");
    add_config(div);

    auto* oracle = app.add_subcommand("oracle-check", "Compare RK4 with the closed-form map");
    add_config(oracle);

    std::string summary, model = "ExpDecayShift", parity = "all";
    auto* fit = app.add_subcommand("fit", "Fit E(N) models to a sweep summary CSV");
    fit->add_option("--summary", summary, "summary.csv written by sweep")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--model", model, "ExpDecayShift or ReciprocalExp");
    fit->add_option("--parity", parity, "Use all, odd or even N");
    fit->add_option("--threshold", common.threshold, "Vanishing threshold in ebits");
    fit->add_option("--out", common.out, "Output directory (default: next to the summary)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(common);
        if (*sweep) return cmd_sweep(common);
        if (*div) return cmd_divisibility(common);
        if (*oracle) return cmd_oracle(common);
        if (*fit) return cmd_fit(common, summary, model, parity);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
