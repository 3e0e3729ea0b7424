#include "nmsim/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace nmsim {

namespace {

using Params = Eigen::Vector3d;  // (a, b, c)
using ModelFn = std::function<double(double, const Params&)>;

constexpr int kMaxIterations = 200;
constexpr double kStepTolerance = 1e-10;

void check_samples(std::span<const double> times, std::span<const double> values,
                   const char* who) {
    if (times.size() != values.size()) {
        throw InvalidArgument(std::string(who) + ": times and values differ in length");
    }
    if (times.empty()) throw InvalidArgument(std::string(who) + ": no samples");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) {
            throw InvalidArgument(std::string(who) + ": times must be strictly increasing");
        }
    }
}

double model_exp_decay_shift(double n, const Params& p) {
    return p(0) * std::exp(-p(2) * (n - 3.0)) + p(1) * p(1);
}

double model_reciprocal_exp(double n, const Params& p) {
    return 1.0 / (p(0) * std::exp(-p(2) * n) + p(1) * p(1));
}

ModelFn model_fn(FitModel model) {
    return model == FitModel::ExpDecayShift ? model_exp_decay_shift : model_reciprocal_exp;
}

double half_sq_norm(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

struct SolveOutcome {
    Params p;
    double cost;
    bool converged;
    int iterations;
};

Eigen::VectorXd residuals(const ModelFn& f, std::span<const FitPoint> pts, const Params& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        r(static_cast<Eigen::Index>(i)) = f(pts[i].n, p) - pts[i].value;
    }
    return r;
}

// Levenberg-Marquardt style damping on top of Gauss-Newton.
SolveOutcome damped_gauss_newton(const ModelFn& f, std::span<const FitPoint> pts, Params p) {
    const auto m = static_cast<Eigen::Index>(pts.size());
    Eigen::VectorXd r = residuals(f, pts, p);
    double cost = half_sq_norm(r);
    double mu = 1e-3;
    Eigen::MatrixXd jac(m, 3);

    for (int it = 1; it <= kMaxIterations; ++it) {
        if (!std::isfinite(cost)) return {p, cost, false, it};
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(p(j)));
            Params hi = p, lo = p;
            hi(j) += h;
            lo(j) -= h;
            jac.col(j) = (residuals(f, pts, hi) - residuals(f, pts, lo)) / (2.0 * h);
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d g = jac.transpose() * r;
        if (cost < 1e-30 || g.lpNorm<Eigen::Infinity>() < 1e-300) return {p, cost, true, it};

        bool accepted = false;
        Eigen::Vector3d delta = Eigen::Vector3d::Zero();
        while (mu < 1e12) {
            Eigen::Matrix3d damped = jtj;
            for (int j = 0; j < 3; ++j) damped(j, j) += mu * std::max(jtj(j, j), 1e-12);
            delta = damped.ldlt().solve(-g);
            const Params trial = p + delta;
            const Eigen::VectorXd r_trial = residuals(f, pts, trial);
            const double c_trial = half_sq_norm(r_trial);
            if (std::isfinite(c_trial) && c_trial <= cost) {
                p = trial;
                r = r_trial;
                cost = c_trial;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        // No downhill step at any damping: p is a stationary point to working precision.
        if (!accepted) return {p, cost, true, it};
        if (delta.lpNorm<Eigen::Infinity>() < kStepTolerance) return {p, cost, true, it};
    }
    return {p, cost, false, kMaxIterations};
}

FitResult to_result(FitModel model, const SolveOutcome& s, std::size_t n_points) {
    FitResult out;
    out.model = model;
    out.a = s.p(0);
    out.b = std::abs(s.p(1));
    out.c = s.p(2);
    out.residual = std::sqrt(2.0 * s.cost / static_cast<double>(n_points));
    out.n_points = n_points;
    out.converged = s.converged;
    out.iterations = s.iterations;
    return out;
}

void check_points(std::span<const FitPoint> pts, const char* who) {
    if (pts.size() < 4) throw InvalidArgument(std::string(who) + ": need at least 4 points");
    std::vector<double> ns;
    for (const auto& p : pts) {
        if (!std::isfinite(p.n) || !std::isfinite(p.value)) {
            throw InvalidArgument(std::string(who) + ": non-finite data point");
        }
        ns.push_back(p.n);
    }
    std::sort(ns.begin(), ns.end());
    if (std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
        throw InvalidArgument(std::string(who) + ": N values must be distinct");
    }
}

FitResult multi_start(FitModel model, std::span<const FitPoint> pts,
                      const std::vector<Params>& starts) {
    const ModelFn f = model_fn(model);
    bool have_converged = false;
    SolveOutcome best{starts.front(), std::numeric_limits<double>::infinity(), false, 0};
    for (const Params& p0 : starts) {
        const SolveOutcome s = damped_gauss_newton(f, pts, p0);
        if (!std::isfinite(s.cost)) continue;
        const bool better = (s.converged && !have_converged) ||
                            (s.converged == have_converged && s.cost < best.cost);
        if (better) {
            best = s;
            have_converged = have_converged || s.converged;
        }
    }
    FitResult result = to_result(model, best, pts.size());
    if (!have_converged) {
        result.converged = false;
        throw FitFailure(to_string(model) + " fit did not converge from any start", result);
    }
    return result;
}

double value_at_smallest_n(std::span<const FitPoint> pts) {
    const auto it = std::min_element(pts.begin(), pts.end(),
                                     [](const FitPoint& x, const FitPoint& y) { return x.n < y.n; });
    return it->value;
}

}  // namespace

SaturationReport detect_saturation(std::span<const double> times, std::span<const double> values,
                                   double window, double tol) {
    check_samples(times, values, "detect_saturation");
    if (!(window > 0.0) || !(tol >= 0.0)) {
        throw InvalidArgument("detect_saturation: window must be > 0 and tol >= 0");
    }
    const double t_end = times.back();
    if (t_end - times.front() < 2.0 * window) {
        throw InvalidArgument("detect_saturation: samples must cover at least 2 * window");
    }

    struct WindowStats {
        double ls_slope;
        double max_fd;
        double mean;
    };
    auto stats = [&](double t0, double t1) {
        std::size_t lo = static_cast<std::size_t>(
            std::lower_bound(times.begin(), times.end(), t0 - 1e-12) - times.begin());
        std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(times.begin(), times.end(), t1 + 1e-12) - times.begin());
        double st = 0, sv = 0;
        const double cnt = static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            st += times[i];
            sv += values[i];
        }
        const double tm = st / cnt, vm = sv / cnt;
        double stt = 0, stv = 0, max_fd = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            stt += (times[i] - tm) * (times[i] - tm);
            stv += (times[i] - tm) * (values[i] - vm);
            if (i > lo) {
                max_fd = std::max(max_fd, std::abs((values[i] - values[i - 1]) /
                                                   (times[i] - times[i - 1])));
            }
        }
        return WindowStats{stt > 0 ? stv / stt : 0.0, max_fd, vm};
    };
    auto passes = [&](const WindowStats& w) {
        return std::abs(w.ls_slope) <= tol && w.max_fd <= tol;
    };

    const WindowStats tail = stats(t_end - window, t_end);
    SaturationReport report;
    report.value = tail.mean;
    report.fitted_slope = tail.ls_slope;
    report.window = {t_end - window, t_end};
    report.slope_bound = tail.max_fd;
    report.saturated = passes(tail);
    if (!report.saturated) return report;

    // Extend the plateau backwards in half-window strides while it keeps passing.
    double start = t_end - window;
    for (double s = start - 0.5 * window; s >= times.front() - 1e-12; s -= 0.5 * window) {
        const WindowStats w = stats(s, s + window);
        if (!passes(w)) break;
        start = s;
        report.slope_bound = std::max(report.slope_bound, w.max_fd);
    }
    report.window.start = start;
    return report;
}

RevivalReport detect_revival(std::span<const double> times, std::span<const double> values,
                             double threshold) {
    check_samples(times, values, "detect_revival");
    RevivalReport report;
    report.threshold = threshold;
    const std::size_t n = values.size();

    // A collapse only counts after the signal has been above threshold.
    std::size_t i = 0;
    while (i < n && values[i] < threshold) ++i;
    while (i < n) {
        while (i < n && values[i] >= threshold) ++i;
        if (i >= n) break;
        const std::size_t collapse = i;
        while (i < n && values[i] < threshold) ++i;
        if (i >= n) break;
        const std::size_t revival = i;
        std::size_t peak = i;
        while (i < n && values[i] >= threshold) {
            if (values[i] > values[peak]) peak = i;
            ++i;
        }
        report.events.push_back({times[collapse], times[revival], values[peak], times[peak]});
    }
    return report;
}

std::string to_string(FitModel model) {
    return model == FitModel::ExpDecayShift ? "ExpDecayShift" : "ReciprocalExp";
}

FitModel fit_model_from_string(const std::string& name) {
    if (name == "ExpDecayShift" || name == "exp_decay_shift") return FitModel::ExpDecayShift;
    if (name == "ReciprocalExp" || name == "reciprocal_exp") return FitModel::ReciprocalExp;
    throw InvalidArgument("unknown fit model '" + name + "'");
}

FitResult fit_exp_decay_shift(std::span<const FitPoint> points) {
    check_points(points, "fit_exp_decay_shift");
    const double a0 = value_at_smallest_n(points);
    std::vector<Params> starts;
    for (double c0 : {0.1, 0.5, 1.0})
        for (double b0 : {0.0, 0.5}) starts.emplace_back(a0, b0, c0);
    return multi_start(FitModel::ExpDecayShift, points, starts);
}

FitResult fit_reciprocal_exp(std::span<const FitPoint> points) {
    check_points(points, "fit_reciprocal_exp");
    for (const auto& p : points) {
        if (!(p.value > 0.0)) throw InvalidArgument("fit_reciprocal_exp: values must be > 0");
    }
    const auto [lo_it, hi_it] = std::minmax_element(
        points.begin(), points.end(), [](const FitPoint& x, const FitPoint& y) { return x.n < y.n; });
    // b^2 starts near the reciprocal of the largest-N value, a from the smallest-N point.
    std::vector<Params> starts;
    for (double c0 : {0.1, 0.5, 1.0}) {
        for (double b0 : {std::sqrt(1.0 / hi_it->value), 0.5}) {
            double a0 = (1.0 / lo_it->value - b0 * b0) * std::exp(c0 * lo_it->n);
            if (!(a0 > 0.0)) a0 = std::exp(c0 * lo_it->n) / lo_it->value;
            starts.emplace_back(a0, b0, c0);
        }
    }
    return multi_start(FitModel::ReciprocalExp, points, starts);
}

FitResult fit(FitModel model, std::span<const FitPoint> points) {
    return model == FitModel::ExpDecayShift ? fit_exp_decay_shift(points)
                                            : fit_reciprocal_exp(points);
}

double extrapolate(const FitResult& f, double n) {
    return model_fn(f.model)(n, Params(f.a, f.b, f.c));
}

double asymptote(const FitResult& f) {
    const double b2 = f.b * f.b;
    if (f.model == FitModel::ExpDecayShift) return b2;
    return b2 > 0.0 ? 1.0 / b2 : std::numeric_limits<double>::infinity();
}

Vanishing vanishing_point(const FitResult& f, double threshold) {
    Vanishing out;
    if (f.model != FitModel::ExpDecayShift) return out;
    const double b2 = f.b * f.b;
    if (!(f.a > 0.0) || !(f.c > 0.0) || !(threshold > b2)) {
        if (extrapolate(f, 3.0) < threshold) {
            out.first_n = 3;
            out.crossing = 3.0;
        }
        return out;
    }
    const double crossing = 3.0 + std::log(f.a / (threshold - b2)) / f.c;
    out.crossing = crossing;
    int n = std::max(3, static_cast<int>(std::floor(crossing)));
    while (extrapolate(f, n) >= threshold) ++n;
    out.first_n = n;
    return out;
}

}  // namespace nmsim
