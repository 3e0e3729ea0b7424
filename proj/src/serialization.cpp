#include "nmsim/serialization.hpp"

#include <charconv>
#include <cmath>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

namespace field {

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw UsageError("field '" + path + "': expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw UsageError("field '" + join(path, key) + "': missing");
    return *it;
}

double number(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = require(obj, key, path);
    if (!v.is_number()) throw UsageError("field '" + join(path, key) + "': expected a number");
    return v.get<double>();
}

double number_or(const Json& obj, const std::string& key, const std::string& path,
                 double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return number(obj, key, path);
}

int integer(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = require(obj, key, path);
    if (!v.is_number_integer()) {
        throw UsageError("field '" + join(path, key) + "': expected an integer");
    }
    return v.get<int>();
}

std::string string(const Json& obj, const std::string& key, const std::string& path) {
    const Json& v = require(obj, key, path);
    if (!v.is_string()) throw UsageError("field '" + join(path, key) + "': expected a string");
    return v.get<std::string>();
}

std::string string_or(const Json& obj, const std::string& key, const std::string& path,
                      const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return string(obj, key, path);
}

}  // namespace field

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

Json complex_pair(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_pair(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw UsageError("field '" + path + "': expected a [re, im] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_pair(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const Json& j, const std::string& path) {
    if (!j.is_array()) throw UsageError("field '" + path + "': expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw UsageError("field '" + path + "': ragged row " + std::to_string(r));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = complex_from_pair(row[static_cast<std::size_t>(c)],
                                        path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

Json pure_state_to_json(const PureState& psi) {
    Json amps = Json::array();
    for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i) amps.push_back(complex_pair(psi.amplitudes()(i)));
    return Json{{"n", psi.num_qubits()}, {"amplitudes", std::move(amps)}};
}

PureState pure_state_from_json(const Json& j, const std::string& path) {
    const int n = field::integer(j, "n", path);
    const Json& amps = field::require(j, "amplitudes", path);
    if (!amps.is_array()) throw UsageError("field '" + path + ".amplitudes': expected an array");
    CVector v(static_cast<Eigen::Index>(amps.size()));
    for (std::size_t i = 0; i < amps.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) =
            complex_from_pair(amps[i], path + ".amplitudes[" + std::to_string(i) + "]");
    }
    try {
        return PureState(n, std::move(v));
    } catch (const InvalidArgument& e) {
        throw UsageError("field '" + path + "': " + e.what());
    }
}

Json density_to_json(const DensityMatrix& rho) {
    return Json{{"n", rho.num_qubits()}, {"elements", matrix_to_json(rho.elements())}};
}

DensityMatrix density_from_json(const Json& j, const std::string& path) {
    const int n = field::integer(j, "n", path);
    try {
        return DensityMatrix(n, matrix_from_json(field::require(j, "elements", path), path + ".elements"));
    } catch (const InvalidArgument& e) {
        throw UsageError("field '" + path + "': " + e.what());
    }
}

Json rate_to_json(const DecayRateModel& model) {
    Json j{{"kind", model.kind()}};
    std::visit(Overloaded{
                   [&](const OhmicZeroTemp& p) {
                       j["s"] = p.s;
                       j["omega_c"] = p.omega_c;
                   },
                   [&](const OhmicFiniteTemp& p) {
                       j["s"] = p.s;
                       j["omega_c"] = p.omega_c;
                       j["theta"] = p.theta;
                   },
                   [&](const Sinusoidal& p) { j["alpha"] = p.alpha; },
                   [&](const Constant& p) { j["gamma0"] = p.gamma0; },
               },
               model.params());
    return j;
}

DecayRateModel rate_from_json(const Json& j, const std::string& path) {
    const std::string kind = field::string(j, "kind", path);
    try {
        if (kind == "ohmic_t0") {
            return DecayRateModel(OhmicZeroTemp{field::number(j, "s", path),
                                 field::number_or(j, "omega_c", path, 1.0)});
        }
        if (kind == "ohmic_finite_t") {
            return DecayRateModel(OhmicFiniteTemp{field::number(j, "s", path),
                                   field::number_or(j, "omega_c", path, 1.0),
                                   field::number_or(j, "theta", path, 0.0)});
        }
        if (kind == "sinusoidal") return DecayRateModel(Sinusoidal{field::number_or(j, "alpha", path, 1.0)});
        if (kind == "constant") return DecayRateModel(Constant{field::number(j, "gamma0", path)});
    } catch (const InvalidArgument& e) {
        throw UsageError("field '" + path + "': " + e.what());
    }
    throw UsageError("field '" + path + ".kind': unknown rate model '" + kind +
                     "' (expected ohmic_t0, ohmic_finite_t, sinusoidal or constant)");
}

Json noise_to_json(const NoiseSpec& spec) {
    Json j{{"kind", to_string(spec.kind)}, {"kappa", spec.kappa}, {"omega0", spec.omega0}};
    if (spec.kind == ChannelKind::Pauli) {
        j["rate_x"] = rate_to_json(spec.rate_x);
        j["rate_y"] = rate_to_json(spec.rate_y);
    }
    j["rate_z"] = rate_to_json(spec.rate_z);
    return j;
}

NoiseSpec noise_from_json(const Json& j, const std::string& path) {
    NoiseSpec spec;
    const std::string kind = field::string(j, "kind", path);
    if (kind == "dephasing") {
        spec.kind = ChannelKind::Dephasing;
    } else if (kind == "pauli" || kind == "depolarising" || kind == "depolarizing") {
        spec.kind = ChannelKind::Pauli;
    } else {
        throw UsageError("field '" + path + ".kind': unknown channel '" + kind +
                         "' (expected dephasing or pauli)");
    }
    spec.kappa = field::number_or(j, "kappa", path, 1.0);
    spec.omega0 = field::number_or(j, "omega0", path, 1.0);
    for (const char* axis : {"rate_x", "rate_y", "rate_z"}) {
        if (!j.contains(axis)) continue;
        DecayRateModel m = rate_from_json(j.at(axis), join(path, axis));
        if (axis[5] == 'x') spec.rate_x = m;
        if (axis[5] == 'y') spec.rate_y = m;
        if (axis[5] == 'z') spec.rate_z = m;
    }
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError("field '" + path + "': " + e.what());
    }
    return spec;
}

Json fit_to_json(const FitResult& fit, std::optional<double> vanishing_threshold) {
    Json j{{"model", to_string(fit.model)},
           {"a", fit.a},
           {"b", fit.b},
           {"c", fit.c},
           {"residual", fit.residual},
           {"n_points", fit.n_points},
           {"converged", fit.converged}};
    j["asymptote"] = finite_or_null(asymptote(fit));
    if (fit.model == FitModel::ExpDecayShift && vanishing_threshold) {
        const Vanishing v = vanishing_point(fit, *vanishing_threshold);
        j["vanishing_threshold"] = *vanishing_threshold;
        j["vanishing_N"] = v.first_n ? Json(*v.first_n) : Json(nullptr);
        j["vanishing_crossing"] = v.crossing ? Json(*v.crossing) : Json(nullptr);
    }
    return j;
}

Json saturation_to_json(const SaturationReport& r) {
    return Json{{"saturated", r.saturated},
                {"value", r.value},
                {"window", Json::array({r.window.start, r.window.end})},
                {"slope_bound", r.slope_bound},
                {"fitted_slope", r.fitted_slope}};
}

Json revival_to_json(const RevivalReport& r) {
    Json events = Json::array();
    for (const auto& e : r.events) {
        events.push_back(Json{{"t_collapse", e.t_collapse},
                              {"t_revival", e.t_revival},
                              {"peak_value", e.peak_value},
                              {"t_peak", e.t_peak}});
    }
    return Json{{"threshold", r.threshold}, {"events", std::move(events)}};
}

Json divisibility_to_json(const DivisibilityVerdict& v) {
    Json windows = Json::array();
    for (const auto& w : v.violation_windows) windows.push_back(Json::array({w.start, w.end}));
    return Json{{"verdict", to_string(v.verdict)},
                {"min_margin", v.min_margin},
                {"violation_windows", std::move(windows)}};
}

}  // namespace nmsim
