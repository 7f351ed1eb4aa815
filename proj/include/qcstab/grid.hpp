#pragma once

#include "qcstab/matrix.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qcstab {

/// Axis-aligned box V = [lower, upper] in R^n, n >= 2.
class Domain {
public:
    Domain(std::vector<double> lower, std::vector<double> upper);

    /// [0, 1]^n.
    static Domain unit_cube(int n);

    int dim() const noexcept { return static_cast<int>(lower_.size()); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    double volume() const;

    bool operator==(const Domain&) const = default;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// Tensor-product lattice over a Domain. Nodes are numbered row-major with
/// axis 0 slowest.
class Grid {
public:
    Grid(Domain domain, std::vector<int> nodes_per_axis);

    /// Same number of nodes on every axis.
    static Grid uniform(Domain domain, int nodes);

    const Domain& domain() const noexcept { return domain_; }
    int dim() const noexcept { return domain_.dim(); }
    const std::vector<int>& nodes_per_axis() const noexcept { return nodes_; }
    const std::vector<double>& spacing() const noexcept { return spacing_; }
    std::size_t node_count() const noexcept { return count_; }
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

    /// Index of the node along one axis.
    int axis_index(std::size_t node, int axis) const {
        return static_cast<int>((node / strides_[static_cast<std::size_t>(axis)]) %
                                static_cast<std::size_t>(nodes_[static_cast<std::size_t>(axis)]));
    }
    double coordinate(std::size_t node, int axis) const;
    std::vector<double> point(std::size_t node) const;
    bool on_boundary(std::size_t node) const;

    bool operator==(const Grid&) const = default;

private:
    Domain domain_;
    std::vector<int> nodes_;
    std::vector<double> spacing_;
    std::vector<std::size_t> strides_;
    std::size_t count_ = 0;
};

/// U = {x in V : dist(x, boundary V) >= margin}, realized on grid nodes.
struct CompactSubset {
    double margin = 0.0;

    static CompactSubset whole() { return {0.0}; }
};

/// Per-axis inclusive node-index ranges covered by a subset.
struct NodeBox {
    std::vector<int> first;
    std::vector<int> last;

    bool contains(const Grid& grid, std::size_t node) const;
    std::size_t count() const;
};

/// Resolves the subset to a node box. Throws PreconditionError if it is empty.
NodeBox resolve_subset(const Grid& grid, const CompactSubset& subset);

/// Trapezoidal product-rule weights for the cells of the resolved subset; zero
/// outside. Sum of weights equals the measure of the subset's node hull.
std::vector<double> quadrature_weights(const Grid& grid, const CompactSubset& subset);

void require_same_grid(const Grid& a, const Grid& b);

/// Sampled mapping v: V -> R^m, one value per node.
class GridMapping {
public:
    GridMapping(Grid grid, int m, std::vector<double> values);

    /// Samples f at every node; f writes m components for a given point.
    static GridMapping sample(Grid grid, int m,
                              const std::function<void(std::span<const double>, std::span<double>)>& f);

    const Grid& grid() const noexcept { return grid_; }
    int m() const noexcept { return m_; }
    std::span<const double> value(std::size_t node) const {
        return {values_.data() + node * static_cast<std::size_t>(m_), static_cast<std::size_t>(m_)};
    }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    Grid grid_;
    int m_;
    std::vector<double> values_;
};

/// One m x n matrix per node.
class MatrixField {
public:
    MatrixField(Grid grid, int m, int n);

    const Grid& grid() const noexcept { return grid_; }
    int rows() const noexcept { return m_; }
    int cols() const noexcept { return n_; }
    std::size_t size() const noexcept { return grid_.node_count(); }

    Matrix at(std::size_t node) const;
    void set(std::size_t node, const Matrix& value);

private:
    Grid grid_;
    int m_;
    int n_;
    std::vector<double> entries_;
};

/// One real per node; NaN marks an invalid node.
class ScalarField {
public:
    explicit ScalarField(Grid grid);
    ScalarField(Grid grid, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }
    double operator[](std::size_t node) const { return values_[node]; }
    double& operator[](std::size_t node) { return values_[node]; }
    bool valid(std::size_t node) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Finite-difference Jacobi matrices: central differences inside, one-sided
/// second-order stencils on boundary nodes.
MatrixField jacobian_field(const GridMapping& v);

/// (trapezoid integral of |f|^p over the subset)^(1/p).
double lp_norm(const ScalarField& f, double p, const CompactSubset& subset);

/// max over subset nodes of |v(x) - u(x)|.
double c_norm_distance(const GridMapping& v, const GridMapping& u, const CompactSubset& subset);

/// L^k norm over the subset of the pointwise operator norm of v' - u'.
double lk_gradient_distance(const GridMapping& v, const GridMapping& u, double k,
                            const CompactSubset& subset);

/// Pointwise operator norm of a matrix field.
ScalarField operator_norm_field(const MatrixField& field);

/// Pointwise Euclidean norm of a mapping.
ScalarField magnitude_field(const GridMapping& v);

}  // namespace qcstab
