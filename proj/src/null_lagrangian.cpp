#include "qcstab/null_lagrangian.hpp"

#include "qcstab/error.hpp"
#include "qcstab/linalg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qcstab {

MultiIndex::MultiIndex(std::vector<int> indices, int bound) : indices_(std::move(indices)), bound_(bound) {
    if (indices_.empty()) throw PreconditionError("MultiIndex: empty index tuple");
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (indices_[i] < 1 || indices_[i] > bound_) {
            std::ostringstream os;
            os << "MultiIndex: entry " << indices_[i] << " outside 1.." << bound_;
            throw PreconditionError(os.str());
        }
        if (i > 0 && indices_[i] <= indices_[i - 1]) throw PreconditionError("MultiIndex: entries must be strictly increasing");
    }
}

std::vector<MultiIndex> enumerate_multi_indices(int bound, int k) {
    if (k < 1 || k > bound) {
        std::ostringstream os;
        os << "enumerate_multi_indices: need 1 <= k <= bound, got k=" << k << ", bound=" << bound;
        throw EmptyInputError(os.str());
    }
    std::vector<MultiIndex> out;
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 1);
    while (true) {
        out.emplace_back(idx, bound);
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == bound - (k - 1 - pos)) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int q = pos + 1; q < k; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
    }
    return out;
}

namespace {

Matrix submatrix(const Matrix& zeta, const MultiIndex& rows, const MultiIndex& cols) {
    const int k = rows.size();
    Matrix sub(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub(a, b) = zeta(rows[a] - 1, cols[b] - 1);
    return sub;
}

void check_index_fit(const Matrix& zeta, const MultiIndex& rows, const MultiIndex& cols) {
    if (rows.size() != cols.size()) throw DimensionError("minor: row and column tuples differ in length");
    if (rows[rows.size() - 1] > zeta.rows() || cols[cols.size() - 1] > zeta.cols())
        throw DimensionError("minor: index tuple exceeds matrix shape");
}

}  // namespace

double minor(const Matrix& zeta, const MultiIndex& rows, const MultiIndex& cols) {
    check_index_fit(zeta, rows, cols);
    return qcstab::determinant(submatrix(zeta, rows, cols));
}

NullLagrangian::NullLagrangian(int n, int m, int k, double gamma0, std::vector<Term> terms)
    : n_(n), m_(m), k_(k), gamma0_(gamma0) {
    if (n < 1 || m < 1 || n > kMaxDim || m > kMaxDim) throw PreconditionError("NullLagrangian: n, m out of range");
    if (k < 2 || k > std::min(n, m)) throw PreconditionError("NullLagrangian: need 2 <= k <= min(n, m)");
    if (!std::isfinite(gamma0)) throw PreconditionError("NullLagrangian: gamma0 not finite");
    for (const Term& t : terms) {
        if (t.rows.size() != k || t.cols.size() != k) throw DimensionError("NullLagrangian: term is not a k x k minor");
        if (t.rows.bound() != m || t.cols.bound() != n) throw DimensionError("NullLagrangian: term index bounds differ from (m, n)");
        if (!std::isfinite(t.gamma)) throw PreconditionError("NullLagrangian: coefficient not finite");
    }
    std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
        if (a.rows != b.rows) return a.rows < b.rows;
        return a.cols < b.cols;
    });
    for (Term& t : terms) {
        if (!terms_.empty() && terms_.back().rows == t.rows && terms_.back().cols == t.cols) {
            terms_.back().gamma += t.gamma;
        } else {
            terms_.push_back(std::move(t));
        }
    }
}

NullLagrangian NullLagrangian::determinant(int n) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 1);
    return NullLagrangian(n, n, n, 0.0, {Term{MultiIndex(all, n), MultiIndex(all, n), 1.0}});
}

NullLagrangian NullLagrangian::single_minor(int n, int m, MultiIndex rows, MultiIndex cols, double gamma) {
    const int k = rows.size();
    return NullLagrangian(n, m, k, 0.0, {Term{std::move(rows), std::move(cols), gamma}});
}

NullLagrangian NullLagrangian::scaled(double s) const {
    std::vector<Term> t = terms_;
    for (Term& term : t) term.gamma *= s;
    return NullLagrangian(n_, m_, k_, gamma0_ * s, std::move(t));
}

namespace {

void check_shape(const NullLagrangian& g, const Matrix& zeta) {
    if (zeta.rows() != g.m() || zeta.cols() != g.n()) {
        std::ostringstream os;
        os << "null Lagrangian expects " << g.m() << "x" << g.n() << " matrices, got " << zeta.rows() << "x" << zeta.cols();
        throw DimensionError(os.str());
    }
}

}  // namespace

double evaluate_nl(const NullLagrangian& g, const Matrix& zeta) {
    check_shape(g, zeta);
    double s = 0.0;
    for (const auto& t : g.terms()) s += t.gamma * qcstab::determinant(submatrix(zeta, t.rows, t.cols));
    return g.gamma0() + s;
}

Matrix evaluate_nl_gradient(const NullLagrangian& g, const Matrix& zeta) {
    check_shape(g, zeta);
    Matrix grad = Matrix::Zero(g.m(), g.n());
    const int k = g.k();
    for (const auto& t : g.terms()) {
        const Matrix cof = cofactor(submatrix(zeta, t.rows, t.cols));
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) grad(t.rows[a] - 1, t.cols[b] - 1) += t.gamma * cof(a, b);
    }
    return grad;
}

bool is_homogeneous_degree_k(const NullLagrangian& g) { return g.gamma0() == 0.0; }

double integral_invariance_residual(const std::function<double(const Matrix&)>& f, const Matrix& zeta,
                                    const GridMapping& phi) {
    const Grid& grid = phi.grid();
    if (zeta.rows() != phi.m() || zeta.cols() != grid.dim())
        throw DimensionError("integral_invariance_residual: zeta shape differs from (m, n) of phi");
    double scale = 0.0;
    for (double x : phi.values()) scale = std::max(scale, std::abs(x));
    double boundary_max = 0.0;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!grid.on_boundary(node)) continue;
        for (double x : phi.value(node)) boundary_max = std::max(boundary_max, std::abs(x));
    }
    if (boundary_max > 1e-12 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << "integral_invariance_residual: test function does not vanish on the boundary (max |phi| = "
           << boundary_max << ")";
        throw PreconditionError(os.str());
    }
    const MatrixField dphi = jacobian_field(phi);
    const std::vector<double> weights = quadrature_weights(grid, CompactSubset::whole());
    const double base = f(zeta);
    std::vector<double> terms(grid.node_count());
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        terms[node] = weights[node] * (f(zeta + dphi.at(node)) - base);
    }
    return pairwise_sum(terms);
}

double integral_invariance_residual(const NullLagrangian& g, const Matrix& zeta, const GridMapping& phi) {
    if (phi.m() != g.m() || phi.grid().dim() != g.n())
        throw DimensionError("integral_invariance_residual: phi dimensions differ from the Lagrangian");
    return integral_invariance_residual([&](const Matrix& a) { return evaluate_nl(g, a); }, zeta, phi);
}

// ---------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const NullLagrangian& g) {
    j = nlohmann::json::object();
    j["n"] = g.n();
    j["m"] = g.m();
    j["k"] = g.k();
    j["gamma0"] = g.gamma0();
    auto terms = nlohmann::json::array();
    for (const auto& t : g.terms()) terms.push_back({{"J", t.rows.indices()}, {"I", t.cols.indices()}, {"gamma", t.gamma}});
    j["terms"] = std::move(terms);
}

namespace {

template <class T>
T required(const nlohmann::json& j, const char* field, const char* where) {
    if (!j.is_object() || !j.contains(field)) throw FormatError(std::string(where) + ": missing field '" + field + "'");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(std::string(where) + ": field '" + field + "' has the wrong type");
    }
}

}  // namespace

NullLagrangian null_lagrangian_from_json(const nlohmann::json& j) {
    const char* where = "null Lagrangian";
    const int n = required<int>(j, "n", where);
    const int m = required<int>(j, "m", where);
    const int k = required<int>(j, "k", where);
    const double gamma0 = j.contains("gamma0") ? required<double>(j, "gamma0", where) : 0.0;
    std::vector<NullLagrangian::Term> terms;
    if (j.contains("terms")) {
        if (!j.at("terms").is_array()) throw FormatError("null Lagrangian: 'terms' must be an array");
        for (const auto& t : j.at("terms")) {
            const auto rows = required<std::vector<int>>(t, "J", "null Lagrangian term");
            const auto cols = required<std::vector<int>>(t, "I", "null Lagrangian term");
            const double gamma = required<double>(t, "gamma", "null Lagrangian term");
            terms.push_back({MultiIndex(rows, m), MultiIndex(cols, n), gamma});
        }
    }
    return NullLagrangian(n, m, k, gamma0, std::move(terms));
}

}  // namespace qcstab
