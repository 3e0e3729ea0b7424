#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nmsim/qstates.hpp"

namespace nmsim {

/// A cut of n qubits into side A and the rest. Qubits are 1-based.
///
/// The stored side is canonical: the smaller side, or the side holding qubit 1
/// when both have n/2 qubits.
class Bipartition {
public:
    Bipartition(int n, std::vector<int> side, std::string name = {});

    int num_qubits() const noexcept { return n_; }
    const std::vector<int>& side_a() const noexcept { return side_a_; }
    std::vector<int> side_b() const;
    std::size_t mask_a() const noexcept { return mask_a_; }

    /// "1-Rest", "highest-cut", or the explicit "{1,2}|{3,4,5}" form.
    const std::string& label() const noexcept { return label_; }
    std::string explicit_label() const;

    /// Accepts the three label forms above.
    static Bipartition parse(std::string_view label, int n);

    friend bool operator==(const Bipartition& a, const Bipartition& b) {
        return a.n_ == b.n_ && a.side_a_ == b.side_a_;
    }

private:
    int n_;
    std::vector<int> side_a_;
    std::size_t mask_a_ = 0;
    std::string label_;
};

/// {1} vs the rest, labelled "1-Rest".
Bipartition one_vs_rest(int n);

/// {1..floor(n/2)} vs the rest, labelled "highest-cut".
Bipartition highest_cut(int n);

/// Every size-m cut, in lexicographic order of side A.
std::vector<Bipartition> cuts_of_size(int n, int m);

/// Transpose on the side-A tensor factor only.
CMatrix partial_transpose(const CMatrix& rho, int n, const Bipartition& cut);
CMatrix partial_transpose(const DensityMatrix& rho, const Bipartition& cut);

/// log2 of the trace norm of the partial transpose, in ebits. Values below
/// 1e-12 are reported as 0.
double log_negativity(const CMatrix& rho, int n, const Bipartition& cut);
double log_negativity(const DensityMatrix& rho, const Bipartition& cut);

/// Pure-state log-negativity from Schmidt coefficients: log2((sum sigma_i)^2).
double schmidt_log_negativity(const PureState& psi, const Bipartition& cut);

/// max - min of log_negativity over all cuts with |A| = m.
double symmetry_check(const DensityMatrix& rho, int m);

}  // namespace nmsim
