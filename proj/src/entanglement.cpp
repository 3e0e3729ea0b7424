#include "nmsim/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nmsim/errors.hpp"

namespace nmsim {

namespace {

constexpr double kZeroClamp = 1e-12;

std::vector<int> complement(int n, const std::vector<int>& side) {
    std::vector<int> out;
    for (int q = 1; q <= n; ++q) {
        if (!std::binary_search(side.begin(), side.end(), q)) out.push_back(q);
    }
    return out;
}

std::string set_label(const std::vector<int>& side) {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < side.size(); ++i) os << (i ? "," : "") << side[i];
    os << '}';
    return os.str();
}

std::vector<int> parse_set(std::string_view text, std::string_view whole) {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}') {
        throw InvalidArgument("bad bipartition label '" + std::string(whole) + "'");
    }
    std::vector<int> out;
    std::string body(text.substr(1, text.size() - 2));
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (item.find_first_not_of(' ', used) != std::string::npos) throw std::exception();
        } catch (const std::exception&) {
            throw InvalidArgument("bad qubit index '" + item + "' in '" + std::string(whole) + "'");
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Bipartition::Bipartition(int n, std::vector<int> side, std::string name) : n_(n) {
    if (n < 2) throw InvalidArgument("Bipartition: need at least 2 qubits");
    std::sort(side.begin(), side.end());
    if (std::adjacent_find(side.begin(), side.end()) != side.end()) {
        throw InvalidArgument("Bipartition: repeated qubit index");
    }
    if (side.empty() || static_cast<int>(side.size()) >= n || side.front() < 1 || side.back() > n) {
        throw InvalidArgument("Bipartition: side must be a non-empty proper subset of 1.." +
                              std::to_string(n));
    }
    const int size = static_cast<int>(side.size());
    const bool larger = 2 * size > n;
    const bool tie_without_first = 2 * size == n && side.front() != 1;
    side_a_ = (larger || tie_without_first) ? complement(n, side) : std::move(side);
    for (int q : side_a_) mask_a_ |= site_mask(q, n);
    label_ = name.empty() ? explicit_label() : std::move(name);
}

std::vector<int> Bipartition::side_b() const { return complement(n_, side_a_); }

std::string Bipartition::explicit_label() const {
    return set_label(side_a_) + "|" + set_label(side_b());
}

Bipartition Bipartition::parse(std::string_view label, int n) {
    if (label == "1-Rest") return one_vs_rest(n);
    if (label == "highest-cut") return highest_cut(n);
    const auto bar = label.find('|');
    if (bar == std::string_view::npos) {
        throw InvalidArgument("bad bipartition label '" + std::string(label) + "'");
    }
    std::vector<int> a = parse_set(label.substr(0, bar), label);
    std::vector<int> b = parse_set(label.substr(bar + 1), label);
    std::vector<int> all;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
    for (int q = 1; q <= n; ++q) {
        if (static_cast<int>(all.size()) != n || all[q - 1] != q) {
            throw InvalidArgument("bipartition '" + std::string(label) +
                                  "' does not split qubits 1.." + std::to_string(n));
        }
    }
    return Bipartition(n, std::move(a));
}

Bipartition one_vs_rest(int n) { return Bipartition(n, {1}, "1-Rest"); }

Bipartition highest_cut(int n) {
    if (n < 3) throw InvalidArgument("highest_cut: need at least 3 qubits");
    std::vector<int> side(static_cast<std::size_t>(n / 2));
    for (int q = 1; q <= n / 2; ++q) side[q - 1] = q;
    return Bipartition(n, std::move(side), "highest-cut");
}

std::vector<Bipartition> cuts_of_size(int n, int m) {
    if (m < 1 || m > n / 2) {
        throw InvalidArgument("cuts_of_size: m must lie in [1, n/2]");
    }
    std::vector<Bipartition> out;
    std::vector<bool> pick(static_cast<std::size_t>(n), false);
    std::fill(pick.begin(), pick.begin() + m, true);
    do {
        std::vector<int> side;
        for (int q = 0; q < n; ++q)
            if (pick[q]) side.push_back(q + 1);
        out.emplace_back(n, std::move(side));
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
}

CMatrix partial_transpose(const CMatrix& rho, int n, const Bipartition& cut) {
    if (cut.num_qubits() != n) throw InvalidArgument("partial_transpose: cut does not match state");
    const auto d = static_cast<std::size_t>(basis_dim(n));
    if (static_cast<std::size_t>(rho.rows()) != d || static_cast<std::size_t>(rho.cols()) != d) {
        throw InvalidArgument("partial_transpose: matrix shape does not match qubit count");
    }
    const std::size_t a = cut.mask_a();
    CMatrix out(rho.rows(), rho.cols());
    for (std::size_t col = 0; col < d; ++col) {
        for (std::size_t row = 0; row < d; ++row) {
            const std::size_t r = (row & ~a) | (col & a);
            const std::size_t c = (col & ~a) | (row & a);
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rho(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
        }
    }
    return out;
}

CMatrix partial_transpose(const DensityMatrix& rho, const Bipartition& cut) {
    return partial_transpose(rho.elements(), rho.num_qubits(), cut);
}

double log_negativity(const CMatrix& rho, int n, const Bipartition& cut) {
    const CMatrix pt = partial_transpose(rho, n, cut);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(pt, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("log_negativity: eigensolve failed");
    const double value = std::log2(es.eigenvalues().cwiseAbs().sum());
    return value < kZeroClamp ? 0.0 : value;
}

double log_negativity(const DensityMatrix& rho, const Bipartition& cut) {
    return log_negativity(rho.elements(), rho.num_qubits(), cut);
}

double schmidt_log_negativity(const PureState& psi, const Bipartition& cut) {
    const int n = psi.num_qubits();
    if (cut.num_qubits() != n) throw InvalidArgument("schmidt_log_negativity: cut does not match state");
    const std::vector<int>& a = cut.side_a();
    const std::vector<int> b = cut.side_b();
    const Eigen::Index da = Eigen::Index{1} << a.size();
    const Eigen::Index db = Eigen::Index{1} << b.size();

    // Row index enumerates side-A bits (first listed qubit most significant).
    CMatrix coeffs(da, db);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(psi.dim()); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        Eigen::Index ra = 0, cb = 0;
        for (int q : a) ra = (ra << 1) | ((idx & site_mask(q, n)) ? 1 : 0);
        for (int q : b) cb = (cb << 1) | ((idx & site_mask(q, n)) ? 1 : 0);
        coeffs(ra, cb) = psi.amplitudes()(i);
    }
    Eigen::JacobiSVD<CMatrix> svd(coeffs);
    const double s = svd.singularValues().sum();
    const double value = std::log2(s * s);
    return value < kZeroClamp ? 0.0 : value;
}

double symmetry_check(const DensityMatrix& rho, int m) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& cut : cuts_of_size(rho.num_qubits(), m)) {
        const double v = log_negativity(rho, cut);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

}  // namespace nmsim
