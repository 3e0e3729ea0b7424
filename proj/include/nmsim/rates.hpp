#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace nmsim {

// Time is dimensionless (t = omega_0 * t_physical); rates are in units of omega_0.

/// Zero-temperature Ohmic dephasing rate with Ohmicity s and cutoff omega_c.
struct OhmicZeroTemp {
    double s;
    double omega_c = 1.0;
};

/// Ohmic rate at finite temperature; theta = k_B T / (hbar omega_c).
struct OhmicFiniteTemp {
    double s;
    double omega_c = 1.0;
    double theta = 0.0;
};

/// gamma(t) = alpha * sin(t).
struct Sinusoidal {
    double alpha;
};

struct Constant {
    double gamma0;
};

/// Immutable time-dependent decay rate gamma(t).
class DecayRateModel {
public:
    using Params = std::variant<OhmicZeroTemp, OhmicFiniteTemp, Sinusoidal, Constant>;

    /// Throws InvalidArgument when the parameters are outside the model's domain.
    DecayRateModel(Params params);  // NOLINT(google-explicit-constructor)

    static DecayRateModel zero() { return DecayRateModel(Constant{0.0}); }

    double rate(double t) const;
    const Params& params() const noexcept { return params_; }

    /// True only for Constant{0}.
    bool is_identically_zero() const noexcept;

    /// Config tag: "ohmic_t0", "ohmic_finite_t", "sinusoidal" or "constant".
    std::string kind() const;

private:
    Params params_;
};

/// Closed-form zero-temperature Ohmic rate
///   omega_c [1 + (omega_c t)^2]^(-s/2) Gamma(s) sin(s arctan(omega_c t)).
double gamma_ohmic_t0(double t, double s, double omega_c = 1.0);

/// Finite-temperature Ohmic rate from the spectral integral
///   int_0^inf dw S(w) coth(w / (2 theta omega_c)) sin(w t) / w,
///   S(w) = w^s omega_c^(1-s) exp(-w / omega_c).
/// theta = 0 replaces coth by 1. Throws NumericalFailure if quadrature misses
/// its tolerance (relative 1e-8, absolute 1e-10).
double gamma_ohmic_finite_t(double t, double s, double omega_c, double theta);

/// Gamma(t) = int_0^t gamma(t') dt'. Closed forms for OhmicZeroTemp,
/// Sinusoidal and Constant; quadrature for OhmicFiniteTemp.
double integrated_rate(const DecayRateModel& model, double t);

/// lim_{t->inf} Gamma(t). Infinite for Markovian Ohmic (s <= 1) and positive
/// constants; throws InvalidArgument for models without a limit (Sinusoidal).
double asymptotic_integrated_rate(const DecayRateModel& model);

/// eta(t) = 1 - exp(-2 Gamma(t)).
double dephasing_factor(const DecayRateModel& model, double t);

enum class Divisibility { CPDivisible, PDivisibleOnly, NonPDivisible };

std::string to_string(Divisibility d);

struct TimeWindow {
    double start;
    double end;
};

struct DivisibilityVerdict {
    Divisibility verdict;
    /// Grid-point spans where the deciding constraint is violated:
    /// pairwise sums for NonPDivisible, single rates for PDivisibleOnly.
    std::vector<TimeWindow> violation_windows;
    /// Smallest value of the deciding constraint on the grid.
    double min_margin;
};

/// CP-divisible iff every rate is non-negative on the grid; P-divisible iff
/// every pairwise sum is. Values above -1e-12 count as non-negative.
DivisibilityVerdict classify_divisibility(const DecayRateModel& gamma_x,
                                          const DecayRateModel& gamma_y,
                                          const DecayRateModel& gamma_z,
                                          std::span<const double> grid);

/// {0, h, 2h, ..., t_max}; t_max must be a multiple of h to 1e-9 relative.
std::vector<double> uniform_grid(double t_max, double step);

}  // namespace nmsim
