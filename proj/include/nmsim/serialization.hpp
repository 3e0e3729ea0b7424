#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nmsim/analysis.hpp"
#include "nmsim/dynamics.hpp"
#include "nmsim/qstates.hpp"
#include "nmsim/rates.hpp"

namespace nmsim {

using Json = nlohmann::ordered_json;

/// Complex numbers are [re, im] pairs; matrices are row-major arrays of rows.
Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j, const std::string& path = "matrix");

/// {"n": 3, "amplitudes": [[re, im], ...]}
Json pure_state_to_json(const PureState& psi);
PureState pure_state_from_json(const Json& j, const std::string& path = "state");

/// {"n": 3, "elements": [[[re, im], ...], ...]}
Json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j, const std::string& path = "state");

/// {"kind": "ohmic_t0", "s": 2.47, "omega_c": 1} and friends; see README.
Json rate_to_json(const DecayRateModel& model);
DecayRateModel rate_from_json(const Json& j, const std::string& path);

Json noise_to_json(const NoiseSpec& spec);
/// Missing rate fields default to zero; missing kappa / omega0 default to 1.
NoiseSpec noise_from_json(const Json& j, const std::string& path = "noise");

Json fit_to_json(const FitResult& fit, std::optional<double> vanishing_threshold = std::nullopt);
Json saturation_to_json(const SaturationReport& r);
Json revival_to_json(const RevivalReport& r);
Json divisibility_to_json(const DivisibilityVerdict& v);

/// Shortest round-trippable decimal form ('.' separator, locale independent).
std::string format_double(double v);

// Typed field access that throws UsageError naming the full field path.
namespace field {

const Json& require(const Json& obj, const std::string& key, const std::string& path);
double number(const Json& obj, const std::string& key, const std::string& path);
double number_or(const Json& obj, const std::string& key, const std::string& path, double fallback);
int integer(const Json& obj, const std::string& key, const std::string& path);
std::string string(const Json& obj, const std::string& key, const std::string& path);
std::string string_or(const Json& obj, const std::string& key, const std::string& path,
                      const std::string& fallback);

}  // namespace field

}  // namespace nmsim
