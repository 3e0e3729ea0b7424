#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nmsim/analysis.hpp"
#include "nmsim/dynamics.hpp"
#include "nmsim/entanglement.hpp"
#include "nmsim/qstates.hpp"
#include "nmsim/serialization.hpp"

namespace nmsim {

enum class StateFamily { GHZ, W, Dicke };

std::string to_string(StateFamily family);
StateFamily state_family_from_string(const std::string& name);

struct StateConfig {
    StateFamily family = StateFamily::GHZ;
    int n = 3;
    int k = 1;  // Dicke excitation number; ignored for GHZ and W
};

struct TimeConfig {
    double t_max = 100.0;
    double step = 0.01;
    double sample_every = 0.1;  // spacing of rows in the trajectory CSV
};

struct AnalysisConfig {
    std::optional<FitModel> fit_model;
    double saturation_window = 10.0;
    double saturation_tol = 1e-4;
    double revival_threshold = 1e-3;
    double snapshot_t = 30.0;
    double vanishing_threshold = 1e-3;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

struct SweepAxes {
    std::vector<StateFamily> families;  // empty: keep state.family
    std::vector<int> n;                 // empty: keep state.n
    std::vector<double> s;              // empty: keep the configured Ohmicity
    std::size_t job_cap = 1024;
    double memory_budget_mb = 4096.0;
};

struct ExperimentConfig {
    StateConfig state;
    NoiseSpec noise;
    TimeConfig time;
    std::vector<std::string> cuts = {"1-Rest"};
    AnalysisConfig analysis;
    OutputConfig output;
    std::optional<SweepAxes> sweep;
};

/// Parses the JSON config schema documented in the README. Errors are
/// UsageError with a "source:line:column" prefix for syntax errors and the
/// offending field path for semantic ones.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
Json config_to_json(const ExperimentConfig& config);

/// Throws UsageError for invalid combinations (unknown cuts, bad grid, ...).
void validate_config(const ExperimentConfig& config);

PureState build_state(const StateConfig& state);
std::vector<Bipartition> build_cuts(const std::vector<std::string>& labels, int n);

struct CutAnalysis {
    std::string label;
    std::optional<SaturationReport> saturation;  // absent when the run is too short
    RevivalReport revival;
    std::optional<double> snapshot_value;        // E at analysis.snapshot_t
};

struct RunResult {
    Trajectory trajectory;
    std::vector<CutAnalysis> analysis;
};

/// Evolves one trajectory and analyses every configured cut. No file I/O.
RunResult run_experiment(const ExperimentConfig& config);

/// Writes trajectory.csv (one column per cut), trajectory_long.csv
/// (t, bipartition_label, log_negativity), metadata.json and analysis.json into `dir`.
void write_run_artifacts(const ExperimentConfig& config, const RunResult& result,
                         const std::filesystem::path& dir);

struct SweepCell {
    StateFamily family;
    int n;
    double s;  // NaN when the rate model has no Ohmicity
    std::string cut;
    double t;
    double value;  // NaN when status != "ok"
    std::string status;
};

/// Rough peak memory for one dense run on n qubits.
std::size_t estimate_run_bytes(int n);

/// Runs every (family, n, s) combination up to analysis.snapshot_t on at most
/// `workers` threads (0 = hardware concurrency) and reports E at the snapshot
/// for each cut. Cells that fail are reported with their error as status.
/// Throws UsageError when the product of the axes exceeds the job cap.
std::vector<SweepCell> run_sweep(const ExperimentConfig& config, unsigned workers = 0);

void write_sweep_summary(const std::vector<SweepCell>& cells, const std::filesystem::path& file);
std::vector<SweepCell> read_sweep_summary(const std::filesystem::path& file);

struct OracleReport {
    double max_deviation = 0.0;
    double worst_t = 0.0;
    std::size_t samples = 0;
    double bound = 1e-7;
    bool pass = false;
};

/// RK4 against the closed-form map of the configured channel on the
/// sample_every grid over [0, t_max].
OracleReport oracle_check(const ExperimentConfig& config, double bound = 1e-7);
Json oracle_to_json(const OracleReport& r);

/// Classifies the configured x/y/z rates on the uniform time grid.
DivisibilityVerdict divisibility_report(const ExperimentConfig& config);

enum class Parity { All, Odd, Even };
Parity parity_from_string(const std::string& name);

struct FitRecord {
    StateFamily family;
    double s;
    std::string cut;
    std::optional<FitResult> fit;  // best-effort result also kept on failure
    std::string status;
};

/// Groups ok cells by (family, s, cut) and fits each group with >= 4 points.
std::vector<FitRecord> fit_sweep(const std::vector<SweepCell>& cells, FitModel model,
                                 Parity parity = Parity::All);

Json fit_records_to_json(const std::vector<FitRecord>& records, double vanishing_threshold);
void write_fit_csv(const std::vector<FitRecord>& records, double vanishing_threshold,
                   const std::filesystem::path& file);

void write_json(const Json& j, const std::filesystem::path& file);

}  // namespace nmsim
