#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "nmsim/entanglement.hpp"
#include "nmsim/qstates.hpp"
#include "nmsim/rates.hpp"

namespace nmsim {

enum class ChannelKind { Dephasing, Pauli };

std::string to_string(ChannelKind kind);

/// Identical local noise on every qubit:
///   d rho/dt = kappa * sum_sites sum_{j in x,y,z} gamma_j(t)/omega0 (s_j rho s_j - rho).
/// Dephasing uses only rate_z; rate_x and rate_y must be identically zero.
/// kappa is the prefactor convention: 1 (single-qubit form) or 1/4 (the
/// three-qubit form with gamma/(4 omega0)).
struct NoiseSpec {
    ChannelKind kind = ChannelKind::Dephasing;
    DecayRateModel rate_x = DecayRateModel::zero();
    DecayRateModel rate_y = DecayRateModel::zero();
    DecayRateModel rate_z = DecayRateModel::zero();
    double omega0 = 1.0;
    double kappa = 1.0;

    static NoiseSpec dephasing(DecayRateModel rate_z, double kappa = 1.0, double omega0 = 1.0);
    static NoiseSpec pauli(DecayRateModel rate_x, DecayRateModel rate_y, DecayRateModel rate_z,
                           double kappa = 1.0, double omega0 = 1.0);

    /// Throws InvalidArgument on an unsupported kappa, non-positive omega0,
    /// or non-zero x/y rates on a dephasing spec.
    void validate() const;
};

/// Right-hand side of the master equation at time t, evaluated with bit-level
/// Pauli conjugations rather than dense 2^n products.
CMatrix lindblad_rhs(const DensityMatrix& rho, double t, const NoiseSpec& spec);

/// Allocation-free form used inside the integrator. `out` must not alias `rho`.
void lindblad_rhs_into(const CMatrix& rho, int n, double t, const NoiseSpec& spec, CMatrix& out);

struct TimeGrid {
    double t_max = 100.0;
    double step = 0.01;
};

struct IntegratorOptions {
    /// Observables are recorded every `observe_every` time units; 0 means every step.
    double observe_every = 0.0;
    /// Full states are recorded every `state_every` time units (and at the final time).
    double state_every = 1.0;
    /// Cuts whose log-negativity is tracked; keyed by their label in the trajectory.
    std::vector<Bipartition> cuts;
    /// Compute the minimum eigenvalue of each recorded state.
    bool check_positivity = true;
    /// Called after every completed step with (t, rho). Optional.
    std::function<void(double, const CMatrix&)> on_step;
};

struct StateSample {
    double t;
    DensityMatrix rho;
};

struct TrajectoryMetadata {
    NoiseSpec spec;
    double step = 0.0;
    double t_max = 0.0;
    std::string integrator = "rk4-fixed-step";
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateSample> states;
    std::map<std::string, std::vector<double>> observables;
    TrajectoryMetadata metadata;

    // Largest drift seen before the per-step trace/Hermiticity correction.
    double max_trace_drift = 0.0;
    double max_hermiticity_error = 0.0;
    // Smallest eigenvalue over recorded states (+inf when positivity is not checked).
    double min_state_eigenvalue = std::numeric_limits<double>::infinity();
};

/// Fixed-step classic RK4 from t = 0 to grid.t_max. Rates are evaluated at
/// the stage times. After each step rho is symmetrised and, if the trace has
/// moved by more than 1e-12, renormalised.
///
/// Throws IntegrationDiagnostic when a recorded state has trace drift > 1e-6
/// or an eigenvalue below -1e-6.
Trajectory evolve(const DensityMatrix& rho0, const NoiseSpec& spec, const TimeGrid& grid,
                  const IntegratorOptions& opts = {});

/// Closed-form dephasing solution: element (x, y) is scaled by
/// exp(-2 kappa Gamma d_H(x, y) / omega0), with d_H the Hamming distance.
DensityMatrix analytic_dephasing_map(const DensityMatrix& rho0, double integrated,
                                     const NoiseSpec& spec);

/// Per-axis integrated rates Lambda_j = int_0^t gamma_j.
struct AxisIntegrals {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Closed-form Pauli-channel solution: each qubit's Pauli components are
/// scaled by lambda_x = exp(-2 kappa (Ly + Lz)/omega0) and cyclic permutations.
DensityMatrix analytic_pauli_map(const DensityMatrix& rho0, const AxisIntegrals& integrals,
                                 const NoiseSpec& spec);

/// Dispatches to the matching analytic map at time t.
DensityMatrix analytic_state(const DensityMatrix& rho0, const NoiseSpec& spec, double t);

}  // namespace nmsim
