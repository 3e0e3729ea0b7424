#include "nmsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
    if (!obj.is_object()) throw UsageError("field '" + path + "': expected an object");
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) {
            throw UsageError("field '" + (path.empty() ? "" : path + ".") + item.key() +
                             "': unknown key");
        }
    }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

bool is_multiple(double value, double step) {
    const double k = std::round(value / step);
    return k >= 1.0 && std::abs(k * step - value) <= 1e-9 * std::max(1.0, value);
}

std::optional<double> ohmicity(const DecayRateModel& m) {
    if (const auto* p = std::get_if<OhmicZeroTemp>(&m.params())) return p->s;
    if (const auto* p = std::get_if<OhmicFiniteTemp>(&m.params())) return p->s;
    return std::nullopt;
}

DecayRateModel with_ohmicity(const DecayRateModel& m, double s) {
    if (const auto* p = std::get_if<OhmicZeroTemp>(&m.params())) {
        return DecayRateModel(OhmicZeroTemp{s, p->omega_c});
    }
    if (const auto* p = std::get_if<OhmicFiniteTemp>(&m.params())) {
        return DecayRateModel(OhmicFiniteTemp{s, p->omega_c, p->theta});
    }
    throw UsageError("field 'sweep.s': the s axis needs an Ohmic noise.rate_z");
}

Json omega_c_of(const DecayRateModel& m) {
    if (const auto* p = std::get_if<OhmicZeroTemp>(&m.params())) return p->omega_c;
    if (const auto* p = std::get_if<OhmicFiniteTemp>(&m.params())) return p->omega_c;
    return nullptr;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string num_or_empty(double v) { return std::isnan(v) ? std::string() : format_double(v); }

double parse_num(const std::string& text, const std::string& where) {
    if (text.empty()) return kNaN;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw UsageError(where + ": '" + text + "' is not a number");
    }
    return v;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_for_write(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    return out;
}

std::optional<double> value_at(const std::vector<double>& times, const std::vector<double>& values,
                               double t, double step) {
    const auto it = std::lower_bound(times.begin(), times.end(), t - 0.5 * step);
    if (it == times.end() || std::abs(*it - t) > 0.5 * step) return std::nullopt;
    return values[static_cast<std::size_t>(it - times.begin())];
}

}  // namespace

std::string to_string(StateFamily family) {
    switch (family) {
        case StateFamily::GHZ: return "ghz";
        case StateFamily::W: return "w";
        case StateFamily::Dicke: return "dicke";
    }
    return "?";
}

StateFamily state_family_from_string(const std::string& name) {
    if (name == "ghz") return StateFamily::GHZ;
    if (name == "w") return StateFamily::W;
    if (name == "dicke") return StateFamily::Dicke;
    throw UsageError("unknown state family '" + name + "' (expected ghz, w or dicke)");
}

Parity parity_from_string(const std::string& name) {
    if (name == "all") return Parity::All;
    if (name == "odd") return Parity::Odd;
    if (name == "even") return Parity::Even;
    throw UsageError("unknown parity '" + name + "' (expected all, odd or even)");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw UsageError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": JSON syntax error: " + e.what());
    }
    try {
        check_keys(j, {"state", "noise", "time", "cuts", "analysis", "output", "sweep"}, "");

        ExperimentConfig cfg;
        const Json& st = field::require(j, "state", "");
        check_keys(st, {"family", "n", "k"}, "state");
        try {
            cfg.state.family = state_family_from_string(field::string(st, "family", "state"));
        } catch (const UsageError& e) {
            throw UsageError(std::string("field 'state.family': ") + e.what());
        }
        cfg.state.n = field::integer(st, "n", "state");
        if (st.contains("k")) cfg.state.k = field::integer(st, "k", "state");

        const Json& nz = field::require(j, "noise", "");
        check_keys(nz, {"kind", "kappa", "omega0", "rate_x", "rate_y", "rate_z"}, "noise");
        cfg.noise = noise_from_json(nz, "noise");

        cfg.time.t_max = cfg.noise.kind == ChannelKind::Pauli ? 20.0 : 100.0;
        if (j.contains("time")) {
            const Json& tm = j.at("time");
            check_keys(tm, {"t_max", "step", "sample_every"}, "time");
            cfg.time.t_max = field::number_or(tm, "t_max", "time", cfg.time.t_max);
            cfg.time.step = field::number_or(tm, "step", "time", cfg.time.step);
            cfg.time.sample_every = field::number_or(tm, "sample_every", "time", cfg.time.sample_every);
        }

        if (j.contains("cuts")) {
            const Json& cuts = j.at("cuts");
            if (!cuts.is_array()) throw UsageError("field 'cuts': expected an array of labels");
            cfg.cuts.clear();
            for (std::size_t i = 0; i < cuts.size(); ++i) {
                if (!cuts[i].is_string()) {
                    throw UsageError("field 'cuts[" + std::to_string(i) + "]': expected a string");
                }
                cfg.cuts.push_back(cuts[i].get<std::string>());
            }
        }

        if (j.contains("analysis")) {
            const Json& an = j.at("analysis");
            check_keys(an, {"fit_model", "saturation_window", "saturation_tol", "revival_threshold",
                            "snapshot_t", "vanishing_threshold"},
                       "analysis");
            if (an.contains("fit_model")) {
                try {
                    cfg.analysis.fit_model =
                        fit_model_from_string(field::string(an, "fit_model", "analysis"));
                } catch (const InvalidArgument& e) {
                    throw UsageError(std::string("field 'analysis.fit_model': ") + e.what());
                }
            }
            auto& a = cfg.analysis;
            a.saturation_window = field::number_or(an, "saturation_window", "analysis", a.saturation_window);
            a.saturation_tol = field::number_or(an, "saturation_tol", "analysis", a.saturation_tol);
            a.revival_threshold = field::number_or(an, "revival_threshold", "analysis", a.revival_threshold);
            a.snapshot_t = field::number_or(an, "snapshot_t", "analysis", a.snapshot_t);
            a.vanishing_threshold =
                field::number_or(an, "vanishing_threshold", "analysis", a.vanishing_threshold);
        }

        if (j.contains("output")) {
            const Json& out = j.at("output");
            check_keys(out, {"directory", "formats"}, "output");
            cfg.output.directory = field::string_or(out, "directory", "output", cfg.output.directory);
            if (out.contains("formats")) {
                const Json& f = out.at("formats");
                if (!f.is_array()) throw UsageError("field 'output.formats': expected an array");
                cfg.output.formats.clear();
                for (const auto& item : f) {
                    if (!item.is_string() || (item != "csv" && item != "json")) {
                        throw UsageError("field 'output.formats': entries must be \"csv\" or \"json\"");
                    }
                    cfg.output.formats.push_back(item.get<std::string>());
                }
            }
        }

        if (j.contains("sweep")) {
            const Json& sw = j.at("sweep");
            check_keys(sw, {"family", "n", "s", "job_cap", "memory_budget_mb"}, "sweep");
            SweepAxes axes;
            if (sw.contains("family")) {
                for (const auto& f : sw.at("family")) {
                    if (!f.is_string()) throw UsageError("field 'sweep.family': expected strings");
                    try {
                        axes.families.push_back(state_family_from_string(f.get<std::string>()));
                    } catch (const UsageError& e) {
                        throw UsageError(std::string("field 'sweep.family': ") + e.what());
                    }
                }
            }
            if (sw.contains("n")) {
                for (const auto& v : sw.at("n")) {
                    if (!v.is_number_integer()) throw UsageError("field 'sweep.n': expected integers");
                    axes.n.push_back(v.get<int>());
                }
            }
            if (sw.contains("s")) {
                for (const auto& v : sw.at("s")) {
                    if (!v.is_number()) throw UsageError("field 'sweep.s': expected numbers");
                    axes.s.push_back(v.get<double>());
                }
            }
            if (sw.contains("job_cap")) {
                const int cap = field::integer(sw, "job_cap", "sweep");
                if (cap < 1) throw UsageError("field 'sweep.job_cap': must be >= 1");
                axes.job_cap = static_cast<std::size_t>(cap);
            }
            axes.memory_budget_mb = field::number_or(sw, "memory_budget_mb", "sweep", axes.memory_budget_mb);
            cfg.sweep = std::move(axes);
        }

        validate_config(cfg);
        return cfg;
    } catch (const UsageError& e) {
        throw UsageError(source + ": " + e.what());
    } catch (const Json::exception& e) {
        throw UsageError(source + ": " + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.state.n < 2 || cfg.state.n > 12) {
        throw UsageError("field 'state.n': must lie in [2, 12]");
    }
    if (cfg.state.family == StateFamily::Dicke && (cfg.state.k < 1 || cfg.state.k >= cfg.state.n)) {
        throw UsageError("field 'state.k': must lie in [1, n-1]");
    }
    if (cfg.state.family == StateFamily::GHZ && cfg.state.n < 2) {
        throw UsageError("field 'state.n': GHZ needs n >= 2");
    }
    try {
        cfg.noise.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("field 'noise': ") + e.what());
    }
    if (!(cfg.time.t_max > 0.0)) throw UsageError("field 'time.t_max': must be > 0");
    if (!(cfg.time.step > 0.0)) throw UsageError("field 'time.step': must be > 0");
    if (!is_multiple(cfg.time.t_max, cfg.time.step)) {
        throw UsageError("field 'time.t_max': must be a multiple of time.step");
    }
    if (!(cfg.time.sample_every >= cfg.time.step) || !is_multiple(cfg.time.sample_every, cfg.time.step)) {
        throw UsageError("field 'time.sample_every': must be a multiple of time.step and >= it");
    }
    if (!(cfg.analysis.saturation_window > 0.0)) {
        throw UsageError("field 'analysis.saturation_window': must be > 0");
    }
    if (!(cfg.analysis.saturation_tol >= 0.0)) {
        throw UsageError("field 'analysis.saturation_tol': must be >= 0");
    }
    if (!(cfg.analysis.snapshot_t > 0.0) || !is_multiple(cfg.analysis.snapshot_t, cfg.time.step)) {
        throw UsageError("field 'analysis.snapshot_t': must be a positive multiple of time.step");
    }

    std::vector<int> ns = {cfg.state.n};
    if (cfg.sweep && !cfg.sweep->n.empty()) ns = cfg.sweep->n;
    for (int n : ns) {
        if (n < 2 || n > 12) throw UsageError("field 'sweep.n': values must lie in [2, 12]");
        for (std::size_t i = 0; i < cfg.cuts.size(); ++i) {
            try {
                Bipartition::parse(cfg.cuts[i], n);
            } catch (const InvalidArgument& e) {
                throw UsageError("field 'cuts[" + std::to_string(i) + "]': " + e.what() +
                                 " (n=" + std::to_string(n) + ")");
            }
        }
    }
    if (cfg.sweep) {
        if (!cfg.sweep->s.empty()) {
            (void)with_ohmicity(cfg.noise.rate_z, cfg.sweep->s.front());
            for (double s : cfg.sweep->s) {
                if (!(s > 0.0)) throw UsageError("field 'sweep.s': values must be > 0");
            }
        }
        if (!(cfg.sweep->memory_budget_mb > 0.0)) {
            throw UsageError("field 'sweep.memory_budget_mb': must be > 0");
        }
    }
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json state{{"family", to_string(cfg.state.family)}, {"n", cfg.state.n}};
    if (cfg.state.family == StateFamily::Dicke) state["k"] = cfg.state.k;
    Json analysis{{"saturation_window", cfg.analysis.saturation_window},
                  {"saturation_tol", cfg.analysis.saturation_tol},
                  {"revival_threshold", cfg.analysis.revival_threshold},
                  {"snapshot_t", cfg.analysis.snapshot_t},
                  {"vanishing_threshold", cfg.analysis.vanishing_threshold}};
    if (cfg.analysis.fit_model) analysis["fit_model"] = to_string(*cfg.analysis.fit_model);
    Json j{{"state", state},
           {"noise", noise_to_json(cfg.noise)},
           {"time",
            {{"t_max", cfg.time.t_max}, {"step", cfg.time.step}, {"sample_every", cfg.time.sample_every}}},
           {"cuts", cfg.cuts},
           {"analysis", analysis},
           {"output", {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}}}};
    if (cfg.sweep) {
        Json fam = Json::array();
        for (auto f : cfg.sweep->families) fam.push_back(to_string(f));
        j["sweep"] = Json{{"family", fam},
                          {"n", cfg.sweep->n},
                          {"s", cfg.sweep->s},
                          {"job_cap", cfg.sweep->job_cap},
                          {"memory_budget_mb", cfg.sweep->memory_budget_mb}};
    }
    return j;
}

PureState build_state(const StateConfig& state) {
    switch (state.family) {
        case StateFamily::GHZ: return ghz_state(state.n);
        case StateFamily::W: return w_state(state.n);
        case StateFamily::Dicke: return dicke_state(state.n, state.k);
    }
    throw InvalidArgument("build_state: unknown family");
}

std::vector<Bipartition> build_cuts(const std::vector<std::string>& labels, int n) {
    std::vector<Bipartition> cuts;
    for (const auto& label : labels) cuts.push_back(Bipartition::parse(label, n));
    return cuts;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    IntegratorOptions opts;
    opts.observe_every = cfg.time.sample_every;
    opts.state_every = cfg.time.sample_every;
    opts.cuts = build_cuts(cfg.cuts, cfg.state.n);

    RunResult result;
    result.trajectory = evolve(density_from_pure(build_state(cfg.state)), cfg.noise,
                               TimeGrid{cfg.time.t_max, cfg.time.step}, opts);
    // Full states are only needed for the invariant checks inside evolve.
    result.trajectory.states.clear();

    const auto& times = result.trajectory.times;
    for (const auto& cut : opts.cuts) {
        const auto& values = result.trajectory.observables.at(cut.label());
        CutAnalysis a;
        a.label = cut.label();
        if (times.back() - times.front() >= 2.0 * cfg.analysis.saturation_window) {
            a.saturation = detect_saturation(times, values, cfg.analysis.saturation_window,
                                             cfg.analysis.saturation_tol);
        }
        a.revival = detect_revival(times, values, cfg.analysis.revival_threshold);
        a.snapshot_value = value_at(times, values, cfg.analysis.snapshot_t, cfg.time.step);
        result.analysis.push_back(std::move(a));
    }
    return result;
}

void write_json(const Json& j, const std::filesystem::path& file) {
    auto out = open_for_write(file);
    out << j.dump(2) << '\n';
}

void write_run_artifacts(const ExperimentConfig& cfg, const RunResult& result,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& traj = result.trajectory;
    const bool csv = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "csv") !=
                     cfg.output.formats.end();
    const bool json = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "json") !=
                      cfg.output.formats.end();

    if (csv) {
        auto out = open_for_write(dir / "trajectory.csv");
        out << 't';
        for (const auto& a : result.analysis) out << ',' << csv_field(a.label);
        out << '\n';
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            out << format_double(traj.times[i]);
            for (const auto& a : result.analysis) {
                out << ',' << format_double(traj.observables.at(a.label)[i]);
            }
            out << '\n';
        }
        // Long form: one row per (t, cut).
        auto longf = open_for_write(dir / "trajectory_long.csv");
        longf << "t,bipartition_label,log_negativity\n";
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            for (const auto& a : result.analysis) {
                longf << format_double(traj.times[i]) << ',' << csv_field(a.label) << ','
                      << format_double(traj.observables.at(a.label)[i]) << '\n';
            }
        }
    }

    Json analysis = Json::array();
    for (const auto& a : result.analysis) {
        Json entry{{"cut", a.label}};
        entry["saturation"] = a.saturation ? saturation_to_json(*a.saturation) : Json(nullptr);
        entry["revival"] = revival_to_json(a.revival);
        entry["snapshot_t"] = cfg.analysis.snapshot_t;
        entry["snapshot_value"] = a.snapshot_value ? Json(*a.snapshot_value) : Json(nullptr);
        analysis.push_back(std::move(entry));
    }
    write_json(Json{{"cuts", analysis}}, dir / "analysis.json");

    if (json) {
        Json obs;
        for (const auto& a : result.analysis) obs[a.label] = traj.observables.at(a.label);
        write_json(Json{{"t", traj.times}, {"log_negativity", obs}}, dir / "trajectory.json");
    }

    {
        Json meta{{"config", config_to_json(cfg)},
                  {"integrator", traj.metadata.integrator},
                  {"kappa", cfg.noise.kappa},
                  {"omega0", cfg.noise.omega0},
                  {"omega_c", omega_c_of(cfg.noise.rate_z)},
                  {"step", traj.metadata.step},
                  {"t_max", traj.metadata.t_max},
                  {"samples", traj.times.size()},
                  {"diagnostics",
                   {{"max_trace_drift", traj.max_trace_drift},
                    {"max_hermiticity_error", traj.max_hermiticity_error},
                    {"min_state_eigenvalue", std::isfinite(traj.min_state_eigenvalue)
                                                 ? Json(traj.min_state_eigenvalue)
                                                 : Json(nullptr)}}},
                  {"generated_at", utc_timestamp()}};
        write_json(meta, dir / "metadata.json");
    }
}

std::size_t estimate_run_bytes(int n) {
    const std::size_t d = basis_dim(n);
    // rho, four RK stages, a stage buffer, the recorded snapshot, the partial
    // transpose and eigensolver workspace: about 12 dense matrices.
    return 12 * d * d * sizeof(Complex);
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, unsigned workers) {
    validate_config(cfg);
    const SweepAxes axes = cfg.sweep.value_or(SweepAxes{});
    const std::vector<StateFamily> families =
        axes.families.empty() ? std::vector<StateFamily>{cfg.state.family} : axes.families;
    const std::vector<int> ns = axes.n.empty() ? std::vector<int>{cfg.state.n} : axes.n;
    std::vector<double> ss = axes.s;
    const bool s_axis = !ss.empty();
    if (!s_axis) ss.push_back(ohmicity(cfg.noise.rate_z).value_or(kNaN));

    struct Job {
        StateFamily family;
        int n;
        double s;
    };
    std::vector<Job> jobs;
    for (auto f : families)
        for (int n : ns)
            for (double s : ss) jobs.push_back({f, n, s});
    if (jobs.size() > axes.job_cap) {
        throw UsageError("sweep has " + std::to_string(jobs.size()) + " jobs, above job_cap " +
                         std::to_string(axes.job_cap));
    }

    const double budget = axes.memory_budget_mb * 1024.0 * 1024.0;
    std::size_t largest = 0;
    for (const auto& job : jobs) {
        const std::size_t b = estimate_run_bytes(job.n);
        if (static_cast<double>(b) <= budget) largest = std::max(largest, b);
    }
    unsigned limit = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
    if (largest > 0) {
        limit = std::min<unsigned>(limit, std::max<std::size_t>(1, static_cast<std::size_t>(budget / largest)));
    }
    limit = std::min<unsigned>(limit, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));

    const double t_snap = cfg.analysis.snapshot_t;
    std::vector<std::vector<SweepCell>> results(jobs.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            std::vector<SweepCell>& cells = results[i];
            auto fail_all = [&](const std::string& why) {
                cells.clear();
                for (const auto& label : cfg.cuts) {
                    cells.push_back({job.family, job.n, job.s, label, t_snap, kNaN, "error: " + why});
                }
            };
            const std::size_t need = estimate_run_bytes(job.n);
            if (static_cast<double>(need) > budget) {
                fail_all("memory estimate " + std::to_string(need >> 20) + " MB exceeds budget");
                continue;
            }
            try {
                ExperimentConfig one = cfg;
                one.sweep.reset();
                one.state.family = job.family;
                one.state.n = job.n;
                if (s_axis) one.noise.rate_z = with_ohmicity(cfg.noise.rate_z, job.s);
                if (job.family == StateFamily::Dicke && one.state.k >= job.n) one.state.k = 1;

                IntegratorOptions opts;
                opts.observe_every = t_snap;
                opts.state_every = t_snap;
                opts.cuts = build_cuts(cfg.cuts, job.n);
                const Trajectory traj =
                    evolve(density_from_pure(build_state(one.state)), one.noise,
                           TimeGrid{t_snap, cfg.time.step}, opts);
                for (const auto& cut : opts.cuts) {
                    cells.push_back({job.family, job.n, job.s, cut.label(), t_snap,
                                     traj.observables.at(cut.label()).back(), "ok"});
                }
            } catch (const std::exception& e) {
                fail_all(e.what());
            }
        }
    };

    std::vector<std::thread> pool;
    for (unsigned w = 1; w < limit; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<SweepCell> out;
    for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
    return out;
}

void write_sweep_summary(const std::vector<SweepCell>& cells, const std::filesystem::path& file) {
    auto out = open_for_write(file);
    out << "family,n,s,cut,t,value,status\n";
    for (const auto& c : cells) {
        out << to_string(c.family) << ',' << c.n << ',' << num_or_empty(c.s) << ','
            << csv_field(c.cut) << ',' << format_double(c.t) << ',' << num_or_empty(c.value) << ','
            << csv_field(c.status) << '\n';
    }
}

std::vector<SweepCell> read_sweep_summary(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw UsageError("cannot read summary " + file.string());
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) !=
                                       std::vector<std::string>{"family", "n", "s", "cut", "t",
                                                                "value", "status"}) {
        throw UsageError(file.string() + ":1: expected header family,n,s,cut,t,value,status");
    }
    std::vector<SweepCell> cells;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = file.string() + ":" + std::to_string(lineno);
        if (f.size() != 7) throw UsageError(where + ": expected 7 fields");
        SweepCell c;
        c.family = state_family_from_string(f[0]);
        const double n = parse_num(f[1], where);
        if (!(n >= 2.0) || n != std::floor(n)) throw UsageError(where + ": bad n");
        c.n = static_cast<int>(n);
        c.s = parse_num(f[2], where);
        c.cut = f[3];
        c.t = parse_num(f[4], where);
        c.value = parse_num(f[5], where);
        c.status = f[6];
        cells.push_back(std::move(c));
    }
    return cells;
}

OracleReport oracle_check(const ExperimentConfig& cfg, double bound) {
    validate_config(cfg);
    const DensityMatrix rho0 = density_from_pure(build_state(cfg.state));
    IntegratorOptions opts;
    opts.observe_every = cfg.time.t_max;
    opts.state_every = cfg.time.sample_every;
    const Trajectory traj = evolve(rho0, cfg.noise, TimeGrid{cfg.time.t_max, cfg.time.step}, opts);

    OracleReport report;
    report.bound = bound;
    for (const auto& sample : traj.states) {
        const DensityMatrix exact = analytic_state(rho0, cfg.noise, sample.t);
        const double dev = (sample.rho.elements() - exact.elements()).cwiseAbs().maxCoeff();
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.worst_t = sample.t;
        }
        ++report.samples;
    }
    report.pass = report.max_deviation <= bound;
    return report;
}

Json oracle_to_json(const OracleReport& r) {
    return Json{{"max_deviation", r.max_deviation},
                {"worst_t", r.worst_t},
                {"samples", r.samples},
                {"bound", r.bound},
                {"pass", r.pass}};
}

DivisibilityVerdict divisibility_report(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const std::vector<double> grid = uniform_grid(cfg.time.t_max, cfg.time.step);
    return classify_divisibility(cfg.noise.rate_x, cfg.noise.rate_y, cfg.noise.rate_z, grid);
}

std::vector<FitRecord> fit_sweep(const std::vector<SweepCell>& cells, FitModel model, Parity parity) {
    using Key = std::tuple<int, double, std::string>;
    std::map<Key, std::vector<FitPoint>> groups;
    for (const auto& c : cells) {
        if (c.status != "ok" || std::isnan(c.value)) continue;
        if (parity == Parity::Odd && c.n % 2 == 0) continue;
        if (parity == Parity::Even && c.n % 2 != 0) continue;
        groups[{static_cast<int>(c.family), std::isnan(c.s) ? -1.0 : c.s, c.cut}].push_back(
            {static_cast<double>(c.n), c.value});
    }
    std::vector<FitRecord> out;
    for (auto& [key, pts] : groups) {
        FitRecord rec;
        rec.family = static_cast<StateFamily>(std::get<0>(key));
        rec.s = std::get<1>(key) < 0.0 ? kNaN : std::get<1>(key);
        rec.cut = std::get<2>(key);
        std::sort(pts.begin(), pts.end(), [](const FitPoint& a, const FitPoint& b) { return a.n < b.n; });
        try {
            rec.fit = fit(model, pts);
            rec.status = "ok";
        } catch (const FitFailure& e) {
            rec.fit = e.best_effort();
            rec.status = std::string("fit-failure: ") + e.what();
        } catch (const std::exception& e) {
            rec.status = std::string("skipped: ") + e.what();
        }
        out.push_back(std::move(rec));
    }
    return out;
}

Json fit_records_to_json(const std::vector<FitRecord>& records, double vanishing_threshold) {
    Json arr = Json::array();
    for (const auto& r : records) {
        Json j{{"family", to_string(r.family)},
               {"s", std::isnan(r.s) ? Json(nullptr) : Json(r.s)},
               {"cut", r.cut},
               {"status", r.status}};
        if (r.fit) j["fit"] = fit_to_json(*r.fit, vanishing_threshold);
        arr.push_back(std::move(j));
    }
    return arr;
}

void write_fit_csv(const std::vector<FitRecord>& records, double vanishing_threshold,
                   const std::filesystem::path& file) {
    auto out = open_for_write(file);
    out << "family,s,cut,model,a,b,c,residual,n_points,asymptote,vanishing_N,status\n";
    for (const auto& r : records) {
        out << to_string(r.family) << ',' << num_or_empty(r.s) << ',' << csv_field(r.cut) << ',';
        if (r.fit) {
            const FitResult& f = *r.fit;
            std::string vanish;
            if (f.model == FitModel::ExpDecayShift) {
                const Vanishing v = vanishing_point(f, vanishing_threshold);
                if (v.first_n) vanish = std::to_string(*v.first_n);
            }
            const double asym = asymptote(f);
            out << to_string(f.model) << ',' << format_double(f.a) << ',' << format_double(f.b) << ','
                << format_double(f.c) << ',' << format_double(f.residual) << ',' << f.n_points << ','
                << (std::isfinite(asym) ? format_double(asym) : std::string()) << ',' << vanish;
        } else {
            out << ",,,,,,,";
        }
        out << ',' << csv_field(r.status) << '\n';
    }
}

}  // namespace nmsim
