#include "nmsim/dynamics.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

constexpr double kTraceRenormTol = 1e-12;
constexpr double kDiagnosticTol = 1e-6;

// kappa * gamma_j(t) / omega0 for each axis.
struct Coefficients {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

Coefficients coefficients_at(const NoiseSpec& spec, double t) {
    const double scale = spec.kappa / spec.omega0;
    Coefficients c;
    c.z = scale * spec.rate_z.rate(t);
    if (spec.kind == ChannelKind::Pauli) {
        c.x = scale * spec.rate_x.rate(t);
        c.y = scale * spec.rate_y.rate(t);
    }
    return c;
}

// sum_i [ cx X_i rho X_i + cy Y_i rho Y_i + cz Z_i rho Z_i ] - n (cx + cy + cz) rho.
//
// Elementwise: X_i rho X_i maps (x, y) -> rho(x^b, y^b); Y_i rho Y_i is the same
// with a sign -1 when bit b differs between x and y; Z_i rho Z_i keeps rho(x, y)
// with that sign. Summing the Z terms over sites gives n - 2 d_H(x, y).
void apply_generator(const CMatrix& rho, int n, const Coefficients& c, CMatrix& out) {
    const auto d = static_cast<std::size_t>(rho.rows());
    const Complex* in = rho.data();
    Complex* dst = out.data();
    const double flip_diag = static_cast<double>(n) * (c.x + c.y);

    for (std::size_t col = 0; col < d; ++col) {
        const std::size_t base = col * d;
        for (std::size_t row = 0; row < d; ++row) {
            const int dist = std::popcount(row ^ col);
            dst[base + row] = (-2.0 * c.z * dist - flip_diag) * in[base + row];
        }
    }
    if (c.x == 0.0 && c.y == 0.0) return;

    const double same = c.x + c.y;
    const double differ = c.x - c.y;
    for (int site = 1; site <= n; ++site) {
        const std::size_t b = site_mask(site, n);
        for (std::size_t col = 0; col < d; ++col) {
            const std::size_t base = col * d;
            const std::size_t src_base = (col ^ b) * d;
            const bool col_bit = (col & b) != 0;
            for (std::size_t row = 0; row < d; ++row) {
                const bool row_bit = (row & b) != 0;
                const double w = (row_bit == col_bit) ? same : differ;
                dst[base + row] += w * in[src_base + (row ^ b)];
            }
        }
    }
}

void check_shape(const CMatrix& rho, int n) {
    const auto d = static_cast<Eigen::Index>(basis_dim(n));
    if (rho.rows() != d || rho.cols() != d) {
        throw InvalidArgument("density matrix dimension does not match qubit count " +
                              std::to_string(n));
    }
}

long long stride_for(double every, double step, const char* what) {
    if (every == 0.0) return 1;
    const auto k = std::llround(every / step);
    if (k < 1 || std::abs(static_cast<double>(k) * step - every) > 1e-9 * std::max(1.0, every)) {
        throw InvalidArgument(std::string(what) + " must be a positive multiple of the step");
    }
    return k;
}

}  // namespace

std::string to_string(ChannelKind kind) {
    return kind == ChannelKind::Dephasing ? "dephasing" : "pauli";
}

NoiseSpec NoiseSpec::dephasing(DecayRateModel rate_z, double kappa, double omega0) {
    NoiseSpec spec;
    spec.kind = ChannelKind::Dephasing;
    spec.rate_z = std::move(rate_z);
    spec.kappa = kappa;
    spec.omega0 = omega0;
    spec.validate();
    return spec;
}

NoiseSpec NoiseSpec::pauli(DecayRateModel rate_x, DecayRateModel rate_y, DecayRateModel rate_z,
                           double kappa, double omega0) {
    NoiseSpec spec;
    spec.kind = ChannelKind::Pauli;
    spec.rate_x = std::move(rate_x);
    spec.rate_y = std::move(rate_y);
    spec.rate_z = std::move(rate_z);
    spec.kappa = kappa;
    spec.omega0 = omega0;
    spec.validate();
    return spec;
}

void NoiseSpec::validate() const {
    if (kappa != 1.0 && kappa != 0.25) {
        throw InvalidArgument("kappa must be 1 or 0.25, got " + std::to_string(kappa));
    }
    if (!(omega0 > 0.0)) throw InvalidArgument("omega0 must be positive");
    if (kind == ChannelKind::Dephasing &&
        (!rate_x.is_identically_zero() || !rate_y.is_identically_zero())) {
        throw InvalidArgument("dephasing noise requires rate_x = rate_y = 0");
    }
}

void lindblad_rhs_into(const CMatrix& rho, int n, double t, const NoiseSpec& spec, CMatrix& out) {
    check_shape(rho, n);
    out.resize(rho.rows(), rho.cols());
    apply_generator(rho, n, coefficients_at(spec, t), out);
}

CMatrix lindblad_rhs(const DensityMatrix& rho, double t, const NoiseSpec& spec) {
    spec.validate();
    CMatrix out;
    lindblad_rhs_into(rho.elements(), rho.num_qubits(), t, spec, out);
    return out;
}

Trajectory evolve(const DensityMatrix& rho0, const NoiseSpec& spec, const TimeGrid& grid,
                  const IntegratorOptions& opts) {
    spec.validate();
    if (!(grid.step > 0.0) || !(grid.t_max > 0.0)) {
        throw InvalidArgument("evolve: t_max and step must be positive");
    }
    const int n = rho0.num_qubits();
    for (const auto& cut : opts.cuts) {
        if (cut.num_qubits() != n) {
            throw InvalidArgument("evolve: cut " + cut.label() + " does not match qubit count");
        }
    }
    const auto steps = std::llround(grid.t_max / grid.step);
    if (std::abs(static_cast<double>(steps) * grid.step - grid.t_max) >
        1e-9 * std::max(1.0, grid.t_max)) {
        throw InvalidArgument("evolve: t_max must be a multiple of the step");
    }
    const long long observe_stride = stride_for(opts.observe_every, grid.step, "observe_every");
    const long long state_stride = stride_for(opts.state_every, grid.step, "state_every");

    Trajectory traj;
    traj.metadata.spec = spec;
    traj.metadata.step = grid.step;
    traj.metadata.t_max = grid.t_max;
    for (const auto& cut : opts.cuts) traj.observables[cut.label()];

    CMatrix rho = rho0.elements();
    const Eigen::Index d = rho.rows();
    CMatrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage(d, d);
    double step_trace_drift = 0.0;

    auto record = [&](long long k) {
        const double t = static_cast<double>(k) * grid.step;
        const bool last = k == steps;
        if (k % observe_stride == 0 || last) {
            traj.times.push_back(t);
            for (const auto& cut : opts.cuts) {
                traj.observables[cut.label()].push_back(log_negativity(rho, n, cut));
            }
        }
        if (k % state_stride == 0 || last) {
            if (step_trace_drift > kDiagnosticTol) {
                throw IntegrationDiagnostic("evolve: trace drift " + std::to_string(step_trace_drift) +
                                            " at t=" + std::to_string(t) + "; reduce the step");
            }
            if (opts.check_positivity) {
                const double lo = min_eigenvalue(rho);
                traj.min_state_eigenvalue = std::min(traj.min_state_eigenvalue, lo);
                if (lo < -kDiagnosticTol) {
                    throw IntegrationDiagnostic("evolve: eigenvalue " + std::to_string(lo) +
                                                " at t=" + std::to_string(t) + "; reduce the step");
                }
            }
            traj.states.push_back({t, DensityMatrix::trusted(n, rho)});
        }
    };

    record(0);
    const double h = grid.step;
    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const Coefficients c0 = coefficients_at(spec, t);
        const Coefficients c_half = coefficients_at(spec, t + 0.5 * h);
        const Coefficients c1 = coefficients_at(spec, t + h);

        apply_generator(rho, n, c0, k1);
        stage.noalias() = rho + (0.5 * h) * k1;
        apply_generator(stage, n, c_half, k2);
        stage.noalias() = rho + (0.5 * h) * k2;
        apply_generator(stage, n, c_half, k3);
        stage.noalias() = rho + h * k3;
        apply_generator(stage, n, c1, k4);
        rho.noalias() += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, hermiticity_error(rho));
        stage = rho.adjoint();
        rho = 0.5 * (rho + stage);
        const Complex tr = rho.trace();
        step_trace_drift = std::abs(tr - Complex{1.0, 0.0});
        traj.max_trace_drift = std::max(traj.max_trace_drift, step_trace_drift);
        if (step_trace_drift > kTraceRenormTol) rho /= tr.real();

        if (opts.on_step) opts.on_step(static_cast<double>(k + 1) * h, rho);
        record(k + 1);
    }
    return traj;
}

DensityMatrix analytic_dephasing_map(const DensityMatrix& rho0, double integrated,
                                     const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind != ChannelKind::Dephasing) {
        throw InvalidArgument("analytic_dephasing_map: spec is not a dephasing channel");
    }
    const int n = rho0.num_qubits();
    std::vector<double> factor(static_cast<std::size_t>(n) + 1);
    for (int dist = 0; dist <= n; ++dist) {
        factor[dist] = std::exp(-2.0 * spec.kappa * integrated * dist / spec.omega0);
    }
    CMatrix out = rho0.elements();
    for (Eigen::Index col = 0; col < out.cols(); ++col)
        for (Eigen::Index row = 0; row < out.rows(); ++row)
            out(row, col) *= factor[std::popcount(static_cast<std::size_t>(row ^ col))];
    return DensityMatrix::trusted(n, std::move(out));
}

DensityMatrix analytic_pauli_map(const DensityMatrix& rho0, const AxisIntegrals& integrals,
                                 const NoiseSpec& spec) {
    spec.validate();
    if (spec.kind != ChannelKind::Pauli) {
        throw InvalidArgument("analytic_pauli_map: spec is not a Pauli channel");
    }
    const double scale = -2.0 * spec.kappa / spec.omega0;
    const double lx = std::exp(scale * (integrals.y + integrals.z));
    const double ly = std::exp(scale * (integrals.z + integrals.x));
    const double lz = std::exp(scale * (integrals.x + integrals.y));

    // Single-qubit action in the {|0>,|1>} block of one site:
    //   populations mix with (1 +- lz)/2, coherences with (lx +- ly)/2.
    const double keep_pop = 0.5 * (1.0 + lz);
    const double swap_pop = 0.5 * (1.0 - lz);
    const double keep_coh = 0.5 * (lx + ly);
    const double swap_coh = 0.5 * (lx - ly);

    const int n = rho0.num_qubits();
    CMatrix out = rho0.elements();
    const auto d = static_cast<std::size_t>(out.rows());
    for (int site = 1; site <= n; ++site) {
        const std::size_t b = site_mask(site, n);
        for (std::size_t col = 0; col < d; ++col) {
            if (col & b) continue;
            for (std::size_t row = 0; row < d; ++row) {
                if (row & b) continue;
                const auto r0 = static_cast<Eigen::Index>(row);
                const auto r1 = static_cast<Eigen::Index>(row | b);
                const auto c0 = static_cast<Eigen::Index>(col);
                const auto c1 = static_cast<Eigen::Index>(col | b);
                const Complex m00 = out(r0, c0), m01 = out(r0, c1);
                const Complex m10 = out(r1, c0), m11 = out(r1, c1);
                out(r0, c0) = keep_pop * m00 + swap_pop * m11;
                out(r1, c1) = swap_pop * m00 + keep_pop * m11;
                out(r0, c1) = keep_coh * m01 + swap_coh * m10;
                out(r1, c0) = swap_coh * m01 + keep_coh * m10;
            }
        }
    }
    return DensityMatrix::trusted(n, std::move(out));
}

DensityMatrix analytic_state(const DensityMatrix& rho0, const NoiseSpec& spec, double t) {
    if (spec.kind == ChannelKind::Dephasing) {
        return analytic_dephasing_map(rho0, integrated_rate(spec.rate_z, t), spec);
    }
    const AxisIntegrals lam{integrated_rate(spec.rate_x, t), integrated_rate(spec.rate_y, t),
                            integrated_rate(spec.rate_z, t)};
    return analytic_pauli_map(rho0, lam, spec);
}

}  // namespace nmsim
