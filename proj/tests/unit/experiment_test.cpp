#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nmsim/errors.hpp"
#include "nmsim/experiment.hpp"

using namespace nmsim;
namespace fs = std::filesystem;

namespace {

const char* kGhzConfig = R"({
  "state": {"family": "ghz", "n": 3},
  "noise": {"kind": "dephasing", "kappa": 0.25,
            "rate_z": {"kind": "ohmic_t0", "s": 2.47}},
  "time": {"t_max": 40, "step": 0.01, "sample_every": 0.1},
  "cuts": ["1-Rest", "highest-cut"]
})";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("nmsim_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string usage_message(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const UsageError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, ParsesAndAppliesDefaults) {
    const ExperimentConfig cfg = parse_config(kGhzConfig);
    EXPECT_EQ(cfg.state.family, StateFamily::GHZ);
    EXPECT_EQ(cfg.state.n, 3);
    EXPECT_EQ(cfg.noise.kappa, 0.25);
    EXPECT_EQ(cfg.noise.rate_z.kind(), "ohmic_t0");
    EXPECT_EQ(cfg.cuts.size(), 2u);
    EXPECT_EQ(cfg.analysis.revival_threshold, 1e-3);
    EXPECT_EQ(cfg.analysis.saturation_window, 10.0);

    const ExperimentConfig pauli = parse_config(R"({
      "state": {"family": "w", "n": 3},
      "noise": {"kind": "pauli", "rate_x": {"kind": "constant", "gamma0": 0.1},
                "rate_y": {"kind": "constant", "gamma0": 0.1},
                "rate_z": {"kind": "sinusoidal", "alpha": 1}}})");
    EXPECT_EQ(pauli.time.t_max, 20.0);
    const ExperimentConfig deph = parse_config(R"({
      "state": {"family": "ghz", "n": 3},
      "noise": {"kind": "dephasing", "rate_z": {"kind": "ohmic_t0", "s": 1}}})");
    EXPECT_EQ(deph.time.t_max, 100.0);
    EXPECT_EQ(deph.time.step, 0.01);
}

TEST(Config, RoundTripsThroughJson) {
    const ExperimentConfig cfg = parse_config(kGhzConfig);
    const ExperimentConfig again = parse_config(config_to_json(cfg).dump());
    EXPECT_EQ(config_to_json(cfg).dump(), config_to_json(again).dump());
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
    const std::string msg = usage_message("{\n  \"state\": {\"family\": \"ghz\",\n  \"n\": }\n}");
    EXPECT_NE(msg.find("cfg.json:3:"), std::string::npos) << msg;
}

TEST(Config, FieldDiagnostics) {
    auto with = [](const std::string& state, const std::string& extra = "") {
        return std::string(R"({"state": )") + state +
               R"(, "noise": {"kind": "dephasing", "rate_z": {"kind": "ohmic_t0", "s": 2}})" + extra + "}";
    };
    EXPECT_NE(usage_message(with(R"({"family": "cat", "n": 3})")).find("state.family"), std::string::npos);
    EXPECT_NE(usage_message(with(R"({"family": "ghz"})")).find("state.n"), std::string::npos);
    EXPECT_NE(usage_message(with(R"({"family": "ghz", "n": 3})", R"(, "time": {"step": -1})"))
                  .find("time.step"),
              std::string::npos);
    EXPECT_NE(usage_message(with(R"({"family": "ghz", "n": 3})", R"(, "time": {"sample_every": 0.001})"))
                  .find("time.sample_every"),
              std::string::npos);
    EXPECT_NE(usage_message(with(R"({"family": "ghz", "n": 3})", R"(, "cuts": ["{1,2}|{3,4}"])"))
                  .find("cuts[0]"),
              std::string::npos);
    EXPECT_NE(usage_message(with(R"({"family": "ghz", "n": 3})", R"(, "colour": 1)")).find("colour"),
              std::string::npos);
    EXPECT_NE(usage_message(R"({"state": {"family": "ghz", "n": 3},
        "noise": {"kind": "dephasing", "kappa": 0.5, "rate_z": {"kind": "constant", "gamma0": 0.1}}})")
                  .find("noise"),
              std::string::npos);
    EXPECT_NE(usage_message(R"({"state": {"family": "ghz", "n": 3},
        "noise": {"kind": "dephasing", "rate_z": {"kind": "constant"}}})")
                  .find("noise.rate_z.gamma0"),
              std::string::npos);
}

TEST(Run, ProducesArtifactsAndIsDeterministic) {
    const ExperimentConfig cfg = parse_config(kGhzConfig);
    const RunResult r = run_experiment(cfg);
    ASSERT_EQ(r.analysis.size(), 2u);
    const auto& e = r.trajectory.observables.at("1-Rest");
    EXPECT_NEAR(e.front(), 1.0, 1e-10);
    ASSERT_TRUE(r.analysis[0].saturation.has_value());
    EXPECT_TRUE(r.analysis[0].saturation->saturated);
    EXPECT_GT(r.analysis[0].saturation->value, 0.0);
    ASSERT_TRUE(r.analysis[0].snapshot_value.has_value());

    const fs::path a = scratch("run_a"), b = scratch("run_b");
    write_run_artifacts(cfg, r, a);
    write_run_artifacts(cfg, run_experiment(cfg), b);
    for (const char* f : {"trajectory.csv", "analysis.json", "metadata.json", "trajectory.json"}) {
        EXPECT_TRUE(fs::exists(a / f)) << f;
    }
    EXPECT_EQ(read_file(a / "trajectory.csv"), read_file(b / "trajectory.csv"));
    const std::string csv = read_file(a / "trajectory.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,1-Rest,highest-cut");

    const Json meta = Json::parse(read_file(a / "metadata.json"));
    EXPECT_EQ(meta["config"]["noise"]["kappa"], 0.25);
    EXPECT_LE(meta["diagnostics"]["max_trace_drift"].get<double>(), 1e-9);
}

TEST(Run, ValuesStayWithinBounds) {
    ExperimentConfig cfg = parse_config(kGhzConfig);
    cfg.state.family = StateFamily::W;
    cfg.state.n = 4;
    cfg.time.t_max = 20.0;
    const RunResult r = run_experiment(cfg);
    for (const auto& [label, values] : r.trajectory.observables)
        for (double v : values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 4.0);
        }
}

TEST(Sweep, SingleCellMatchesRun) {
    ExperimentConfig cfg = parse_config(kGhzConfig);
    cfg.analysis.snapshot_t = 30.0;
    const RunResult r = run_experiment(cfg);
    const auto cells = run_sweep(cfg, 1);
    ASSERT_EQ(cells.size(), 2u);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        EXPECT_EQ(cells[i].status, "ok");
        EXPECT_EQ(cells[i].cut, r.analysis[i].label);
        EXPECT_EQ(cells[i].value, *r.analysis[i].snapshot_value);
    }
}

TEST(Sweep, AxesJobCapAndSummaryRoundTrip) {
    ExperimentConfig cfg = parse_config(kGhzConfig);
    cfg.analysis.snapshot_t = 5.0;
    cfg.cuts = {"1-Rest"};
    cfg.sweep = SweepAxes{};
    cfg.sweep->n = {3, 4};
    cfg.sweep->s = {1.0, 2.47};
    const auto serial = run_sweep(cfg, 1);
    const auto parallel = run_sweep(cfg, 3);
    ASSERT_EQ(serial.size(), 4u);
    for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].value, parallel[i].value);

    const fs::path dir = scratch("sweep");
    write_sweep_summary(serial, dir / "summary.csv");
    const auto back = read_sweep_summary(dir / "summary.csv");
    ASSERT_EQ(back.size(), serial.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].n, serial[i].n);
        EXPECT_EQ(back[i].s, serial[i].s);
        EXPECT_EQ(back[i].value, serial[i].value);
        EXPECT_EQ(back[i].cut, serial[i].cut);
    }

    cfg.sweep->job_cap = 3;
    EXPECT_THROW(run_sweep(cfg, 1), UsageError);
}

TEST(Sweep, FailuresAreRecordedPerCell) {
    ExperimentConfig cfg = parse_config(kGhzConfig);
    cfg.analysis.snapshot_t = 1.0;
    cfg.cuts = {"1-Rest"};
    cfg.sweep = SweepAxes{};
    cfg.sweep->n = {3, 11};
    cfg.sweep->memory_budget_mb = 64.0;
    const auto cells = run_sweep(cfg, 1);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].status, "ok");
    EXPECT_NE(cells[1].status.find("memory"), std::string::npos);
    EXPECT_TRUE(std::isnan(cells[1].value));
}

TEST(Oracle, ZeroNoiseAndSineRates) {
    ExperimentConfig cfg = parse_config(R"({"state": {"family": "ghz", "n": 3},
        "noise": {"kind": "dephasing", "rate_z": {"kind": "constant", "gamma0": 0}},
        "time": {"t_max": 5, "step": 0.01, "sample_every": 0.5}})");
    const OracleReport zero = oracle_check(cfg);
    EXPECT_LE(zero.max_deviation, 1e-12);
    EXPECT_TRUE(zero.pass);

    cfg = parse_config(R"({"state": {"family": "ghz", "n": 3},
        "noise": {"kind": "pauli", "rate_x": {"kind": "constant", "gamma0": 0.1},
                  "rate_y": {"kind": "constant", "gamma0": 0.1},
                  "rate_z": {"kind": "sinusoidal", "alpha": 1}},
        "time": {"sample_every": 0.1}})");
    EXPECT_TRUE(oracle_check(cfg).pass);
}

TEST(Divisibility, ReportFromConfig) {
    const ExperimentConfig cfg = parse_config(R"({"state": {"family": "ghz", "n": 3},
        "noise": {"kind": "pauli", "rate_x": {"kind": "constant", "gamma0": 1.5},
                  "rate_y": {"kind": "constant", "gamma0": 1.5},
                  "rate_z": {"kind": "sinusoidal", "alpha": 1}}})");
    EXPECT_EQ(divisibility_report(cfg).verdict, Divisibility::PDivisibleOnly);
}

TEST(FitSweep, GroupsAndFits) {
    std::vector<SweepCell> cells;
    for (int n = 3; n <= 9; ++n) {
        cells.push_back({StateFamily::GHZ, n, 2.47, "1-Rest", 30.0, 0.3 * std::exp(-0.4 * (n - 3)) + 0.01, "ok"});
    }
    cells.push_back({StateFamily::GHZ, 10, 2.47, "1-Rest", 30.0, std::nan(""), "error: boom"});
    const auto recs = fit_sweep(cells, FitModel::ExpDecayShift);
    ASSERT_EQ(recs.size(), 1u);
    ASSERT_TRUE(recs[0].fit.has_value());
    EXPECT_EQ(recs[0].fit->n_points, 7u);
    EXPECT_NEAR(recs[0].fit->c, 0.4, 1e-6);

    const auto odd = fit_sweep(cells, FitModel::ExpDecayShift, Parity::Odd);
    EXPECT_EQ(odd[0].fit->n_points, 4u);

    const Json j = fit_records_to_json(recs, 1e-3);
    EXPECT_EQ(j[0]["fit"]["model"], "ExpDecayShift");
    EXPECT_NEAR(j[0]["fit"]["asymptote"].get<double>(), 0.01, 1e-8);
}
