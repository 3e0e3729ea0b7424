#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmsim/errors.hpp"
#include "nmsim/rates.hpp"

namespace nmsim {

struct SaturationReport {
    bool saturated = false;
    double value = 0.0;        // mean over the trailing window
    TimeWindow window{};       // span over which every sub-window passed the slope test
    double slope_bound = 0.0;  // max |dE/dt| (finite differences) over `window`
    double fitted_slope = 0.0; // least-squares slope over the trailing window
};

/// Scans trailing windows of length `window`; the tail is saturated when both
/// the least-squares slope and every finite-difference slope are within `tol`.
/// Requires samples spanning at least 2 * window.
SaturationReport detect_saturation(std::span<const double> times, std::span<const double> values,
                                   double window = 10.0, double tol = 1e-4);

struct RevivalEvent {
    double t_collapse;  // first sample below threshold after being above it
    double t_revival;   // first sample back above threshold
    double peak_value;  // maximum before the next collapse (or the end)
    double t_peak;
};

struct RevivalReport {
    std::vector<RevivalEvent> events;
    double threshold = 0.0;
};

RevivalReport detect_revival(std::span<const double> times, std::span<const double> values,
                             double threshold = 1e-3);

enum class FitModel {
    ExpDecayShift,  // E(N) = a exp(-c (N - 3)) + b^2
    ReciprocalExp,  // E(N) = 1 / (a exp(-c N) + b^2)
};

std::string to_string(FitModel model);
FitModel fit_model_from_string(const std::string& name);

struct FitPoint {
    double n;
    double value;
};

struct FitResult {
    FitModel model = FitModel::ExpDecayShift;
    double a = 0.0;
    double b = 0.0;  // reported >= 0; only b^2 enters either model
    double c = 0.0;
    double residual = 0.0;  // root-mean-square misfit
    std::size_t n_points = 0;
    bool converged = false;
    int iterations = 0;
};

class FitFailure : public NumericalFailure {
public:
    FitFailure(const std::string& what, FitResult best)
        : NumericalFailure(what), best_(best) {}
    const FitResult& best_effort() const noexcept { return best_; }

private:
    FitResult best_;
};

/// Multi-start damped Gauss-Newton with a central-difference Jacobian.
/// Needs >= 4 points with distinct N. Throws FitFailure when no start converges.
FitResult fit_exp_decay_shift(std::span<const FitPoint> points);

/// Same solver on the reciprocal-exponential model; requires every value > 0.
FitResult fit_reciprocal_exp(std::span<const FitPoint> points);

FitResult fit(FitModel model, std::span<const FitPoint> points);

/// Model value at N.
double extrapolate(const FitResult& fit, double n);

/// Large-N limit: b^2 for ExpDecayShift, 1/b^2 for ReciprocalExp.
double asymptote(const FitResult& fit);

struct Vanishing {
    std::optional<int> first_n;      // smallest integer N >= 3 with E(N) < threshold
    std::optional<double> crossing;  // real N where E(N) = threshold
};

/// Only meaningful for ExpDecayShift; empty when E never drops below threshold.
Vanishing vanishing_point(const FitResult& fit, double threshold = 1e-3);

}  // namespace nmsim
