#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace nmsim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix2c = Eigen::Matrix2cd;

// Basis convention: qubit 1 is the most significant bit of a basis index,
// so for n = 3 the index 4 = 0b100 is |100> (qubit 1 excited).

/// 2^n, with a guard against absurd qubit counts.
std::size_t basis_dim(int n);

/// Bit mask selecting qubit `site` (1-based) in an n-qubit basis index.
std::size_t site_mask(int site, int n);

/// Pure n-qubit state with unit-norm amplitudes over the computational basis.
class PureState {
public:
    PureState(int n, CVector amplitudes);

    int num_qubits() const noexcept { return n_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    const CVector& amplitudes() const noexcept { return amps_; }

private:
    int n_;
    CVector amps_;
};

/// Density matrix on n qubits.
///
/// The public constructor checks Hermiticity (1e-12), unit trace (1e-12) and
/// positivity (min eigenvalue >= -1e-10). `trusted` only checks the shape and
/// is meant for integrator output, whose drift is monitored separately.
class DensityMatrix {
public:
    DensityMatrix(int n, CMatrix elements);

    static DensityMatrix trusted(int n, CMatrix elements);

    int num_qubits() const noexcept { return n_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }
    const CMatrix& elements() const noexcept { return rho_; }

private:
    struct TrustedTag {};
    DensityMatrix(TrustedTag, int n, CMatrix elements);

    int n_;
    CMatrix rho_;
};

PureState ghz_state(int n);
PureState w_state(int n);

/// Symmetric Dicke state: equal weight on every basis string with k ones.
PureState dicke_state(int n, int k);

DensityMatrix density_from_pure(const PureState& psi);

/// op acting on qubit `site` (1-based), identity elsewhere; dense 2^n x 2^n.
CMatrix embed_local_operator(const Matrix2c& op, int site, int n);

namespace pauli {
Matrix2c identity();
Matrix2c x();
Matrix2c y();
Matrix2c z();
}  // namespace pauli

/// Basis index after relabelling qubits: qubit q of `index` moves to position
/// perm[q-1] (both 1-based). perm must be a permutation of 1..n.
std::size_t permute_index(std::size_t index, std::span<const int> perm, int n);

/// Applies `permute_index` to the rows and columns of an operator.
CMatrix relabel_qubits(const CMatrix& op, std::span<const int> perm, int n);

double hermiticity_error(const CMatrix& m);  // max |m - m^dagger|
double min_eigenvalue(const CMatrix& hermitian);

}  // namespace nmsim
