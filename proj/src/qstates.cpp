#include "nmsim/qstates.hpp"

#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

constexpr int kMaxQubits = 14;

void require_qubits(int n, int min_n, const char* what) {
    if (n < min_n || n > kMaxQubits) {
        throw InvalidArgument(std::string(what) + ": qubit count " + std::to_string(n) +
                              " outside [" + std::to_string(min_n) + ", " +
                              std::to_string(kMaxQubits) + "]");
    }
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::size_t basis_dim(int n) {
    require_qubits(n, 1, "basis_dim");
    return std::size_t{1} << n;
}

std::size_t site_mask(int site, int n) {
    if (site < 1 || site > n) {
        throw InvalidArgument("site " + std::to_string(site) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    return std::size_t{1} << (n - site);
}

PureState::PureState(int n, CVector amplitudes) : n_(n), amps_(std::move(amplitudes)) {
    require_qubits(n, 1, "PureState");
    if (static_cast<std::size_t>(amps_.size()) != basis_dim(n)) {
        throw InvalidArgument("PureState: expected " + std::to_string(basis_dim(n)) +
                              " amplitudes, got " + std::to_string(amps_.size()));
    }
    if (std::abs(amps_.squaredNorm() - 1.0) > 1e-12) {
        throw InvalidArgument("PureState: amplitudes are not normalised");
    }
}

DensityMatrix::DensityMatrix(int n, CMatrix elements) : n_(n), rho_(std::move(elements)) {
    require_qubits(n, 1, "DensityMatrix");
    const auto d = static_cast<Eigen::Index>(basis_dim(n));
    if (rho_.rows() != d || rho_.cols() != d) {
        throw InvalidArgument("DensityMatrix: shape does not match 2^n");
    }
    if (hermiticity_error(rho_) > 1e-12) {
        throw InvalidArgument("DensityMatrix: not Hermitian");
    }
    if (std::abs(rho_.trace() - Complex{1.0, 0.0}) > 1e-12) {
        throw InvalidArgument("DensityMatrix: trace is not 1");
    }
    if (min_eigenvalue(rho_) < -1e-10) {
        throw InvalidArgument("DensityMatrix: not positive semidefinite");
    }
}

DensityMatrix::DensityMatrix(TrustedTag, int n, CMatrix elements)
    : n_(n), rho_(std::move(elements)) {
    require_qubits(n, 1, "DensityMatrix");
    const auto d = static_cast<Eigen::Index>(basis_dim(n));
    if (rho_.rows() != d || rho_.cols() != d) {
        throw InvalidArgument("DensityMatrix: shape does not match 2^n");
    }
}

DensityMatrix DensityMatrix::trusted(int n, CMatrix elements) {
    return DensityMatrix(TrustedTag{}, n, std::move(elements));
}

PureState ghz_state(int n) {
    require_qubits(n, 1, "ghz_state");
    CVector v = CVector::Zero(static_cast<Eigen::Index>(basis_dim(n)));
    const double amp = 1.0 / std::sqrt(2.0);
    v(0) = amp;
    v(v.size() - 1) = amp;
    return PureState(n, std::move(v));
}

PureState w_state(int n) {
    require_qubits(n, 2, "w_state");
    return dicke_state(n, 1);
}

PureState dicke_state(int n, int k) {
    require_qubits(n, 2, "dicke_state");
    if (k < 1 || k > n - 1) {
        throw InvalidArgument("dicke_state: excitation count " + std::to_string(k) +
                              " outside [1, " + std::to_string(n - 1) + "]");
    }
    const std::size_t d = basis_dim(n);
    const double amp = 1.0 / std::sqrt(binomial(n, k));
    CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        if (std::popcount(i) == k) v(static_cast<Eigen::Index>(i)) = amp;
    }
    return PureState(n, std::move(v));
}

DensityMatrix density_from_pure(const PureState& psi) {
    const CVector& a = psi.amplitudes();
    CMatrix rho = a * a.adjoint();
    return DensityMatrix::trusted(psi.num_qubits(), std::move(rho));
}

CMatrix embed_local_operator(const Matrix2c& op, int site, int n) {
    const std::size_t mask = site_mask(site, n);
    const auto d = static_cast<Eigen::Index>(basis_dim(n));
    CMatrix out = CMatrix::Zero(d, d);
    for (Eigen::Index col = 0; col < d; ++col) {
        const auto c = static_cast<std::size_t>(col);
        const int cb = (c & mask) ? 1 : 0;
        for (int rb = 0; rb < 2; ++rb) {
            const std::size_t r = rb ? (c | mask) : (c & ~mask);
            out(static_cast<Eigen::Index>(r), col) = op(rb, cb);
        }
    }
    return out;
}

namespace pauli {
Matrix2c identity() { return Matrix2c::Identity(); }
Matrix2c x() {
    Matrix2c m;
    m << 0, 1, 1, 0;
    return m;
}
Matrix2c y() {
    Matrix2c m;
    m << 0, Complex{0, -1}, Complex{0, 1}, 0;
    return m;
}
Matrix2c z() {
    Matrix2c m;
    m << 1, 0, 0, -1;
    return m;
}
}  // namespace pauli

std::size_t permute_index(std::size_t index, std::span<const int> perm, int n) {
    if (static_cast<int>(perm.size()) != n) {
        throw InvalidArgument("permute_index: permutation length does not match n");
    }
    std::size_t out = 0;
    for (int q = 1; q <= n; ++q) {
        if (index & site_mask(q, n)) out |= site_mask(perm[q - 1], n);
    }
    return out;
}

CMatrix relabel_qubits(const CMatrix& op, std::span<const int> perm, int n) {
    std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
    for (int p : perm) {
        if (p < 1 || p > n || seen[p]) throw InvalidArgument("relabel_qubits: not a permutation");
        seen[p] = true;
    }
    const auto d = static_cast<Eigen::Index>(basis_dim(n));
    std::vector<Eigen::Index> map(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        map[i] = static_cast<Eigen::Index>(permute_index(static_cast<std::size_t>(i), perm, n));
    }
    CMatrix out(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
        for (Eigen::Index r = 0; r < d; ++r) out(map[r], map[c]) = op(r, c);
    return out;
}

double hermiticity_error(const CMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const CMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("min_eigenvalue: eigensolve failed");
    return es.eigenvalues().minCoeff();
}

}  // namespace nmsim
