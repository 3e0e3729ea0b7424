#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "nmsim/errors.hpp"
#include "nmsim/qstates.hpp"

using namespace nmsim;

namespace {

// Independent Kronecker product for cross-checking embeddings.
CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

TEST(QStates, GhzSingleQubitIsPlusState) {
    const PureState psi = ghz_state(1);
    ASSERT_EQ(psi.dim(), 2u);
    EXPECT_NEAR(psi.amplitudes()(0).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(psi.amplitudes()(1).real(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(QStates, GhzThreeQubits) {
    const PureState psi = ghz_state(3);
    for (Eigen::Index i = 0; i < 8; ++i) {
        const double expected = (i == 0 || i == 7) ? 1.0 / std::sqrt(2.0) : 0.0;
        EXPECT_NEAR(std::abs(psi.amplitudes()(i)), expected, 1e-15) << i;
    }
}

TEST(QStates, GhzRejectsZeroQubits) { EXPECT_THROW(ghz_state(0), InvalidArgument); }

TEST(QStates, GhzFiveMatchesOneVersusFourDecomposition) {
    // (|0>|0_4> + |1>|15_4>)/sqrt2 with qubit 1 as the leading factor.
    CVector zero = CVector::Zero(2), one = CVector::Zero(2);
    zero(0) = 1.0;
    one(1) = 1.0;
    CVector r0 = CVector::Zero(16), r15 = CVector::Zero(16);
    r0(0) = 1.0;
    r15(15) = 1.0;
    CVector expected = CVector::Zero(32);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 16; ++b)
            expected(a * 16 + b) = (zero(a) * r0(b) + one(a) * r15(b)) / std::sqrt(2.0);
    EXPECT_LT((ghz_state(5).amplitudes() - expected).norm(), 1e-15);
}

TEST(QStates, WStateSmallCases) {
    const PureState w2 = w_state(2);
    EXPECT_NEAR(w2.amplitudes()(1).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(w2.amplitudes()(2).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(w2.amplitudes()(0), Complex(0.0));

    const PureState w3 = w_state(3);
    for (Eigen::Index i = 0; i < 8; ++i) {
        const double expected = (i == 1 || i == 2 || i == 4) ? 1.0 / std::sqrt(3.0) : 0.0;
        EXPECT_NEAR(std::abs(w3.amplitudes()(i)), expected, 1e-15) << i;
    }
    EXPECT_THROW(w_state(1), InvalidArgument);
}

TEST(QStates, WFiveMatchesOneVersusFourDecomposition) {
    CVector expected = CVector::Zero(32);
    for (int b : {1, 2, 4, 8}) expected(b) = 1.0 / std::sqrt(5.0);  // |0>|b_4>
    expected(16) = 1.0 / std::sqrt(5.0);                            // |1>|0_4>
    EXPECT_LT((w_state(5).amplitudes() - expected).norm(), 1e-15);
}

TEST(QStates, DickeStates) {
    EXPECT_LT((dicke_state(3, 1).amplitudes() - w_state(3).amplitudes()).norm(), 1e-15);

    // Brute-force enumeration of weight-2 strings on 4 qubits.
    std::vector<int> weight2;
    for (int i = 0; i < 16; ++i)
        if (std::popcount(static_cast<unsigned>(i)) == 2) weight2.push_back(i);
    EXPECT_EQ(weight2, (std::vector<int>{3, 5, 6, 9, 10, 12}));
    const PureState d42 = dicke_state(4, 2);
    for (int i = 0; i < 16; ++i) {
        const bool on = std::find(weight2.begin(), weight2.end(), i) != weight2.end();
        EXPECT_NEAR(std::abs(d42.amplitudes()(i)), on ? 1.0 / std::sqrt(6.0) : 0.0, 1e-15);
    }

    const PureState d43 = dicke_state(4, 3), w4 = w_state(4);
    for (int i = 0; i < 16; ++i) {
        EXPECT_NEAR(std::abs(d43.amplitudes()(i)), std::abs(w4.amplitudes()(15 - i)), 1e-15);
    }
    EXPECT_THROW(dicke_state(4, 0), InvalidArgument);
    EXPECT_THROW(dicke_state(4, 4), InvalidArgument);
}

TEST(QStates, DensityFromPure) {
    const DensityMatrix g2 = density_from_pure(ghz_state(2));
    for (Eigen::Index r = 0; r < 4; ++r)
        for (Eigen::Index c = 0; c < 4; ++c) {
            const bool corner = (r == 0 || r == 3) && (c == 0 || c == 3);
            EXPECT_NEAR(std::abs(g2.elements()(r, c)), corner ? 0.5 : 0.0, 1e-15);
        }

    const DensityMatrix w3 = density_from_pure(w_state(3));
    for (Eigen::Index r = 0; r < 8; ++r)
        for (Eigen::Index c = 0; c < 8; ++c) {
            const Complex v = w3.elements()(r, c);
            if (std::abs(v) > 1e-15) EXPECT_NEAR(v.real(), 1.0 / 3.0, 1e-15);
        }

    for (const PureState& psi : {ghz_state(4), w_state(5), dicke_state(5, 2)}) {
        const CMatrix rho = density_from_pure(psi).elements();
        EXPECT_NEAR((rho * rho).trace().real(), 1.0, 1e-12);
    }
}

TEST(QStates, DensityValidation) {
    CMatrix bad = CMatrix::Identity(2, 2);
    EXPECT_THROW(DensityMatrix(1, bad), InvalidArgument);  // trace 2
    CMatrix nonherm = 0.5 * CMatrix::Identity(2, 2);
    nonherm(0, 1) = 0.1;
    EXPECT_THROW(DensityMatrix(1, nonherm), InvalidArgument);
    CMatrix negative = CMatrix::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    EXPECT_THROW(DensityMatrix(1, negative), InvalidArgument);
    EXPECT_THROW(DensityMatrix(2, 0.5 * CMatrix::Identity(2, 2)), InvalidArgument);
    EXPECT_NO_THROW(DensityMatrix(1, 0.5 * CMatrix::Identity(2, 2)));
}

TEST(QStates, PureStateValidation) {
    CVector v = CVector::Ones(4);
    EXPECT_THROW(PureState(2, v), InvalidArgument);
    EXPECT_THROW(PureState(3, v / 2.0), InvalidArgument);
    EXPECT_NO_THROW(PureState(2, v / 2.0));
}

TEST(QStates, EmbedLocalOperator) {
    const CMatrix z1 = embed_local_operator(pauli::z(), 1, 2);
    const Eigen::Vector4d diag(1, 1, -1, -1);
    EXPECT_LT((z1 - diag.cast<Complex>().asDiagonal().toDenseMatrix()).norm(), 1e-15);

    CMatrix swap = CMatrix::Zero(4, 4);
    swap(0, 1) = swap(1, 0) = swap(2, 3) = swap(3, 2) = 1.0;
    EXPECT_LT((embed_local_operator(pauli::x(), 2, 2) - swap).norm(), 1e-15);

    for (int site = 1; site <= 3; ++site) {
        EXPECT_LT((embed_local_operator(pauli::identity(), site, 3) - CMatrix::Identity(8, 8)).norm(),
                  1e-15);
    }

    // Site 2 of 3 equals I (x) Y (x) I by explicit Kronecker products.
    const CMatrix i2 = CMatrix::Identity(2, 2);
    const CMatrix y = pauli::y();
    EXPECT_LT((embed_local_operator(pauli::y(), 2, 3) - kron(kron(i2, y), i2)).norm(), 1e-15);

    EXPECT_THROW(embed_local_operator(pauli::x(), 0, 2), InvalidArgument);
    EXPECT_THROW(embed_local_operator(pauli::x(), 3, 2), InvalidArgument);
}

TEST(QStates, RelabellingPreservesSymmetricStates) {
    const std::vector<int> perm = {3, 1, 2};
    for (const PureState& psi : {ghz_state(3), w_state(3)}) {
        const CMatrix rho = density_from_pure(psi).elements();
        EXPECT_LT((relabel_qubits(rho, perm, 3) - rho).norm(), 1e-15);
    }
    // |100> -> qubit 1 moves to position 3 -> |001>.
    EXPECT_EQ(permute_index(4, perm, 3), 1u);
}

TEST(QStates, HermiticityAndEigenvalueHelpers) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 1) = Complex(0.0, 0.3);
    EXPECT_NEAR(hermiticity_error(m), 0.3, 1e-15);
    CMatrix h = CMatrix::Zero(2, 2);
    h(0, 0) = 0.2;
    h(1, 1) = -0.1;
    EXPECT_NEAR(min_eigenvalue(h), -0.1, 1e-15);
}
