#pragma once

#include "qcstab/grid.hpp"
#include "qcstab/matrix.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <vector>

namespace qcstab {

/// Strictly increasing 1-based index tuple (i_1 < ... < i_k) with entries <= bound.
class MultiIndex {
public:
    MultiIndex(std::vector<int> indices, int bound);

    int size() const noexcept { return static_cast<int>(indices_.size()); }
    int bound() const noexcept { return bound_; }
    int operator[](int i) const { return indices_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& indices() const noexcept { return indices_; }

    auto operator<=>(const MultiIndex& o) const { return indices_ <=> o.indices_; }
    bool operator==(const MultiIndex& o) const { return indices_ == o.indices_; }

private:
    std::vector<int> indices_;
    int bound_;
};

/// All C(bound, k) index tuples in lexicographic order.
std::vector<MultiIndex> enumerate_multi_indices(int bound, int k);

/// det_{JI} zeta: rows J, columns I.
double minor(const Matrix& zeta, const MultiIndex& rows, const MultiIndex& cols);

/// G(zeta) = gamma0 + sum gamma_JI det_JI zeta over k x k minors.
class NullLagrangian {
public:
    struct Term {
        MultiIndex rows;  // J over m
        MultiIndex cols;  // I over n
        double gamma;
    };

    NullLagrangian(int n, int m, int k, double gamma0, std::vector<Term> terms);

    /// det on square n x n matrices.
    static NullLagrangian determinant(int n);
    /// A single gamma * det_JI term.
    static NullLagrangian single_minor(int n, int m, MultiIndex rows, MultiIndex cols, double gamma);

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    int k() const noexcept { return k_; }
    double gamma0() const noexcept { return gamma0_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }

    /// All coefficients multiplied by s, gamma0 included.
    NullLagrangian scaled(double s) const;

private:
    int n_;
    int m_;
    int k_;
    double gamma0_;
    std::vector<Term> terms_;  // sorted by (J, I), duplicates merged
};

double evaluate_nl(const NullLagrangian& g, const Matrix& zeta);

/// dG/dzeta, an m x n matrix.
Matrix evaluate_nl_gradient(const NullLagrangian& g, const Matrix& zeta);

/// True iff gamma0 == 0, so G(t zeta) = t^k G(zeta).
bool is_homogeneous_degree_k(const NullLagrangian& g);

/// integral_U G(zeta + phi') dx - |U| G(zeta) with finite-difference Jacobians
/// and trapezoid quadrature over the whole grid. phi must vanish on boundary
/// nodes (relative tolerance 1e-12).
double integral_invariance_residual(const NullLagrangian& g, const Matrix& zeta, const GridMapping& phi);

/// Same residual for an arbitrary integrand, for contrast with non-null F.
double integral_invariance_residual(const std::function<double(const Matrix&)>& f, const Matrix& zeta,
                                    const GridMapping& phi);

void to_json(nlohmann::json& j, const NullLagrangian& g);
NullLagrangian null_lagrangian_from_json(const nlohmann::json& j);

}  // namespace qcstab
