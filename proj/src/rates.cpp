#include "nmsim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

constexpr double kQuadRelTol = 1e-8;
constexpr double kQuadAbsTol = 1e-10;
constexpr double kSignTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_ohmic(double s, double omega_c) {
    if (!(s > 0.0) || !(omega_c > 0.0)) {
        throw InvalidArgument("Ohmic rate requires s > 0 and omega_c > 0");
    }
}

// Integrates f over [0, x_max] in segments no longer than half a period of
// the oscillation. The first segment goes through tanh-sinh so that the
// x^(s-1) endpoint behaviour for s < 1 is handled.
template <class F>
double oscillatory_integral(F f, double x_max, double half_period, const char* what) {
    const double seg = std::min(half_period, 2.0);
    const auto count = static_cast<int>(std::ceil(x_max / seg));

    double total = 0.0, total_err = 0.0, total_l1 = 0.0;

    boost::math::quadrature::tanh_sinh<double> ts(12);
    double err = 0.0, l1 = 0.0;
    total += ts.integrate(f, 0.0, seg, kQuadRelTol * 1e-2, &err, &l1);
    total_err += err;
    total_l1 += l1;

    for (int i = 1; i < count; ++i) {
        const double a = i * seg;
        const double b = std::min((i + 1) * seg, x_max);
        double e = 0.0, l = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, a, b, 12, kQuadRelTol * 1e-2, &e, &l);
        total_err += e;
        total_l1 += l;
    }
    if (!std::isfinite(total) || total_err > std::max(kQuadAbsTol, kQuadRelTol * total_l1)) {
        throw NumericalFailure(std::string(what) + ": quadrature did not converge (error estimate " +
                               std::to_string(total_err) + ")");
    }
    return total;
}

// Large enough that x^s e^-x is negligible beyond it.
double spectral_cutoff(double s) { return std::max(60.0, 10.0 + 4.0 * s); }

double thermal_factor(double x, double theta) {
    if (theta == 0.0) return 1.0;
    return 1.0 / std::tanh(x / (2.0 * theta));
}

double integrated_ohmic_t0(double t, double s, double omega_c) {
    const double x = omega_c * t;
    const double log_term = std::log1p(x * x);
    const double phase = std::atan(x);
    const double nu = s - 1.0;
    if (nu == 0.0) return 0.5 * log_term;
    // Antiderivative of the zero-temperature rate, written so that s -> 1 is stable:
    //   Gamma(s) [1 - (1+x^2)^(-nu/2) cos(nu atan x)] / nu
    const double decay = -0.5 * nu * log_term;
    const double half = std::sin(0.5 * nu * phase);
    const double bracket = -std::expm1(decay) + std::exp(decay) * 2.0 * half * half;
    return std::tgamma(s) * bracket / nu;
}

double integrated_ohmic_finite_t(double t, double s, double omega_c, double theta) {
    if (t == 0.0) return 0.0;
    const double tau = omega_c * t;
    auto f = [&](double x) {
        if (x <= 0.0) return 0.0;
        const double h = std::sin(0.5 * x * tau);
        return std::pow(x, s - 2.0) * std::exp(-x) * thermal_factor(x, theta) * 2.0 * h * h;
    };
    return oscillatory_integral(f, spectral_cutoff(s), std::numbers::pi / tau,
                                "integrated_rate(ohmic_finite_t)");
}

}  // namespace

DecayRateModel::DecayRateModel(Params params) : params_(params) {
    std::visit(Overloaded{
                   [](const OhmicZeroTemp& p) { check_ohmic(p.s, p.omega_c); },
                   [](const OhmicFiniteTemp& p) {
                       check_ohmic(p.s, p.omega_c);
                       if (!(p.theta >= 0.0)) throw InvalidArgument("theta must be >= 0");
                   },
                   [](const Sinusoidal& p) {
                       if (!std::isfinite(p.alpha)) throw InvalidArgument("alpha must be finite");
                   },
                   [](const Constant& p) {
                       if (!(p.gamma0 >= 0.0) || !std::isfinite(p.gamma0)) {
                           throw InvalidArgument("constant rate must be finite and >= 0");
                       }
                   },
               },
               params_);
}

double DecayRateModel::rate(double t) const {
    return std::visit(
        Overloaded{
            [t](const OhmicZeroTemp& p) { return gamma_ohmic_t0(t, p.s, p.omega_c); },
            [t](const OhmicFiniteTemp& p) {
                return gamma_ohmic_finite_t(t, p.s, p.omega_c, p.theta);
            },
            [t](const Sinusoidal& p) { return p.alpha * std::sin(t); },
            [](const Constant& p) { return p.gamma0; },
        },
        params_);
}

bool DecayRateModel::is_identically_zero() const noexcept {
    const auto* c = std::get_if<Constant>(&params_);
    return c != nullptr && c->gamma0 == 0.0;
}

std::string DecayRateModel::kind() const {
    return std::visit(Overloaded{
                          [](const OhmicZeroTemp&) { return std::string("ohmic_t0"); },
                          [](const OhmicFiniteTemp&) { return std::string("ohmic_finite_t"); },
                          [](const Sinusoidal&) { return std::string("sinusoidal"); },
                          [](const Constant&) { return std::string("constant"); },
                      },
                      params_);
}

double gamma_ohmic_t0(double t, double s, double omega_c) {
    check_ohmic(s, omega_c);
    const double x = omega_c * t;
    return omega_c * std::pow(1.0 + x * x, -0.5 * s) * std::tgamma(s) * std::sin(s * std::atan(x));
}

double gamma_ohmic_finite_t(double t, double s, double omega_c, double theta) {
    check_ohmic(s, omega_c);
    if (!(theta >= 0.0)) throw InvalidArgument("theta must be >= 0");
    if (t == 0.0) return 0.0;
    const double tau = omega_c * t;
    auto f = [&](double x) {
        if (x <= 0.0) return 0.0;
        return std::pow(x, s - 1.0) * std::exp(-x) * thermal_factor(x, theta) * std::sin(x * tau);
    };
    return omega_c * oscillatory_integral(f, spectral_cutoff(s), std::numbers::pi / std::abs(tau),
                                          "gamma_ohmic_finite_t");
}

double integrated_rate(const DecayRateModel& model, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("integrated_rate: t must be >= 0");
    return std::visit(
        Overloaded{
            [t](const OhmicZeroTemp& p) { return integrated_ohmic_t0(t, p.s, p.omega_c); },
            [t](const OhmicFiniteTemp& p) {
                return integrated_ohmic_finite_t(t, p.s, p.omega_c, p.theta);
            },
            [t](const Sinusoidal& p) { return p.alpha * (1.0 - std::cos(t)); },
            [t](const Constant& p) { return p.gamma0 * t; },
        },
        model.params());
}

double asymptotic_integrated_rate(const DecayRateModel& model) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        Overloaded{
            [](const OhmicZeroTemp& p) { return p.s > 1.0 ? std::tgamma(p.s - 1.0) : inf; },
            [](const OhmicFiniteTemp&) -> double {
                throw InvalidArgument("asymptotic_integrated_rate: not available at finite temperature");
            },
            [](const Sinusoidal&) -> double {
                throw InvalidArgument("asymptotic_integrated_rate: sinusoidal rate has no limit");
            },
            [](const Constant& p) { return p.gamma0 > 0.0 ? inf : 0.0; },
        },
        model.params());
}

double dephasing_factor(const DecayRateModel& model, double t) {
    return -std::expm1(-2.0 * integrated_rate(model, t));
}

std::string to_string(Divisibility d) {
    switch (d) {
        case Divisibility::CPDivisible: return "CPDivisible";
        case Divisibility::PDivisibleOnly: return "PDivisibleOnly";
        case Divisibility::NonPDivisible: return "NonPDivisible";
    }
    return "unknown";
}

DivisibilityVerdict classify_divisibility(const DecayRateModel& gamma_x,
                                          const DecayRateModel& gamma_y,
                                          const DecayRateModel& gamma_z,
                                          std::span<const double> grid) {
    if (grid.size() < 2) throw InvalidArgument("classify_divisibility: grid needs >= 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw InvalidArgument("classify_divisibility: grid must be strictly increasing");
        }
    }

    std::vector<double> single(grid.size()), pairwise(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double gx = gamma_x.rate(grid[i]);
        const double gy = gamma_y.rate(grid[i]);
        const double gz = gamma_z.rate(grid[i]);
        single[i] = std::min({gx, gy, gz});
        pairwise[i] = std::min({gx + gy, gy + gz, gz + gx});
    }

    auto windows_below = [&](const std::vector<double>& v) {
        std::vector<TimeWindow> out;
        bool open = false;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const bool bad = v[i] < -kSignTol;
            if (bad && !open) {
                out.push_back({grid[i], grid[i]});
                open = true;
            } else if (bad) {
                out.back().end = grid[i];
            } else {
                open = false;
            }
        }
        return out;
    };

    const double single_min = *std::min_element(single.begin(), single.end());
    const double pair_min = *std::min_element(pairwise.begin(), pairwise.end());
    if (single_min >= -kSignTol) return {Divisibility::CPDivisible, {}, single_min};
    if (pair_min >= -kSignTol) {
        return {Divisibility::PDivisibleOnly, windows_below(single), single_min};
    }
    return {Divisibility::NonPDivisible, windows_below(pairwise), pair_min};
}

std::vector<double> uniform_grid(double t_max, double step) {
    if (!(step > 0.0) || !(t_max > 0.0)) {
        throw InvalidArgument("uniform_grid: t_max and step must be positive");
    }
    const auto count = std::llround(t_max / step);
    if (std::abs(static_cast<double>(count) * step - t_max) > 1e-9 * std::max(1.0, t_max)) {
        throw InvalidArgument("uniform_grid: t_max is not a multiple of the step");
    }
    std::vector<double> grid(static_cast<std::size_t>(count) + 1);
    for (long long k = 0; k <= count; ++k) grid[static_cast<std::size_t>(k)] = k * step;
    return grid;
}

}  // namespace nmsim
