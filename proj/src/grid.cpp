#include "qcstab/grid.hpp"

#include "qcstab/error.hpp"
#include "qcstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcstab {

double pairwise_sum(std::span<const double> terms) {
    constexpr std::size_t kBlock = 8;
    if (terms.size() <= kBlock) {
        double s = 0.0;
        for (double t : terms) s += t;
        return s;
    }
    const std::size_t half = terms.size() / 2;
    return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

// ---------------------------------------------------------------- Domain

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw DimensionError("Domain: lower and upper differ in length");
    if (lower_.size() < 2) throw PreconditionError("Domain: dimension n must be at least 2");
    if (lower_.size() > static_cast<std::size_t>(kMaxDim)) throw PreconditionError("Domain: dimension exceeds kMaxDim");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
            std::ostringstream os;
            os << "Domain: need lower < upper on axis " << i;
            throw PreconditionError(os.str());
        }
    }
}

Domain Domain::unit_cube(int n) {
    return Domain(std::vector<double>(static_cast<std::size_t>(n), 0.0),
                  std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double Domain::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lower_.size(); ++i) v *= upper_[i] - lower_[i];
    return v;
}

// ---------------------------------------------------------------- Grid

Grid::Grid(Domain domain, std::vector<int> nodes_per_axis)
    : domain_(std::move(domain)), nodes_(std::move(nodes_per_axis)) {
    const int n = domain_.dim();
    if (static_cast<int>(nodes_.size()) != n) throw DimensionError("Grid: nodes_per_axis length differs from dimension");
    spacing_.resize(static_cast<std::size_t>(n));
    strides_.assign(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (nodes_[ui] < 3) throw PreconditionError("Grid: need at least 3 nodes per axis");
        spacing_[ui] = (domain_.upper()[ui] - domain_.lower()[ui]) / (nodes_[ui] - 1);
    }
    for (int i = n - 2; i >= 0; --i) {
        const auto ui = static_cast<std::size_t>(i);
        strides_[ui] = strides_[ui + 1] * static_cast<std::size_t>(nodes_[ui + 1]);
    }
    count_ = strides_[0] * static_cast<std::size_t>(nodes_[0]);
}

Grid Grid::uniform(Domain domain, int nodes) {
    const auto n = static_cast<std::size_t>(domain.dim());
    return Grid(std::move(domain), std::vector<int>(n, nodes));
}

double Grid::coordinate(std::size_t node, int axis) const {
    const auto ua = static_cast<std::size_t>(axis);
    const int i = axis_index(node, axis);
    if (i == nodes_[ua] - 1) return domain_.upper()[ua];
    return domain_.lower()[ua] + i * spacing_[ua];
}

std::vector<double> Grid::point(std::size_t node) const {
    std::vector<double> x(static_cast<std::size_t>(dim()));
    for (int a = 0; a < dim(); ++a) x[static_cast<std::size_t>(a)] = coordinate(node, a);
    return x;
}

bool Grid::on_boundary(std::size_t node) const {
    for (int a = 0; a < dim(); ++a) {
        const int i = axis_index(node, a);
        if (i == 0 || i == nodes_[static_cast<std::size_t>(a)] - 1) return true;
    }
    return false;
}

// ---------------------------------------------------------------- subsets

bool NodeBox::contains(const Grid& grid, std::size_t node) const {
    for (int a = 0; a < grid.dim(); ++a) {
        const int i = grid.axis_index(node, a);
        if (i < first[static_cast<std::size_t>(a)] || i > last[static_cast<std::size_t>(a)]) return false;
    }
    return true;
}

std::size_t NodeBox::count() const {
    std::size_t c = 1;
    for (std::size_t a = 0; a < first.size(); ++a) c *= static_cast<std::size_t>(last[a] - first[a] + 1);
    return c;
}

NodeBox resolve_subset(const Grid& grid, const CompactSubset& subset) {
    if (!(subset.margin >= 0.0)) throw PreconditionError("CompactSubset: margin must be nonnegative");
    NodeBox box;
    const int n = grid.dim();
    box.first.resize(static_cast<std::size_t>(n));
    box.last.resize(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double h = grid.spacing()[ua];
        const int count = grid.nodes_per_axis()[ua];
        // dist to the box boundary along this axis is min(i, count-1-i) * h.
        const double slack = 1e-9 * h;
        int skip = static_cast<int>(std::ceil((subset.margin - slack) / h));
        skip = std::max(skip, 0);
        box.first[ua] = skip;
        box.last[ua] = count - 1 - skip;
        if (box.first[ua] > box.last[ua]) {
            std::ostringstream os;
            os << "CompactSubset: margin " << subset.margin << " leaves no nodes on axis " << a;
            throw PreconditionError(os.str());
        }
    }
    return box;
}

std::vector<double> quadrature_weights(const Grid& grid, const CompactSubset& subset) {
    const NodeBox box = resolve_subset(grid, subset);
    const int n = grid.dim();
    std::vector<std::vector<double>> axis_weights(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double h = grid.spacing()[ua];
        auto& w = axis_weights[ua];
        w.assign(static_cast<std::size_t>(grid.nodes_per_axis()[ua]), 0.0);
        for (int i = box.first[ua]; i <= box.last[ua]; ++i) {
            // Trapezoid: half weight at the ends of the covered range.
            if (box.first[ua] == box.last[ua]) {
                w[static_cast<std::size_t>(i)] = 0.0;
            } else if (i == box.first[ua] || i == box.last[ua]) {
                w[static_cast<std::size_t>(i)] = 0.5 * h;
            } else {
                w[static_cast<std::size_t>(i)] = h;
            }
        }
    }
    std::vector<double> weights(grid.node_count());
    for (std::size_t node = 0; node < weights.size(); ++node) {
        double w = 1.0;
        for (int a = 0; a < n && w != 0.0; ++a) w *= axis_weights[static_cast<std::size_t>(a)][static_cast<std::size_t>(grid.axis_index(node, a))];
        weights[node] = w;
    }
    return weights;
}

void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw DimensionError("grids differ");
}

// ---------------------------------------------------------------- fields

GridMapping::GridMapping(Grid grid, int m, std::vector<double> values)
    : grid_(std::move(grid)), m_(m), values_(std::move(values)) {
    if (m_ < 1 || m_ > kMaxDim) throw PreconditionError("GridMapping: m out of range");
    if (values_.size() != grid_.node_count() * static_cast<std::size_t>(m_))
        throw DimensionError("GridMapping: value count does not match node count times m");
    for (double x : values_)
        if (!std::isfinite(x)) throw PreconditionError("GridMapping: non-finite value");
}

GridMapping GridMapping::sample(Grid grid, int m,
                                const std::function<void(std::span<const double>, std::span<double>)>& f) {
    const std::size_t count = grid.node_count();
    std::vector<double> values(count * static_cast<std::size_t>(m));
    for (std::size_t node = 0; node < count; ++node) {
        const std::vector<double> x = grid.point(node);
        f(x, std::span<double>(values.data() + node * static_cast<std::size_t>(m), static_cast<std::size_t>(m)));
    }
    return GridMapping(std::move(grid), m, std::move(values));
}

MatrixField::MatrixField(Grid grid, int m, int n)
    : grid_(std::move(grid)), m_(m), n_(n),
      entries_(grid_.node_count() * static_cast<std::size_t>(m) * static_cast<std::size_t>(n), 0.0) {}

Matrix MatrixField::at(std::size_t node) const {
    Matrix a(m_, n_);
    const double* p = entries_.data() + node * static_cast<std::size_t>(m_ * n_);
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i < m_; ++i) a(i, j) = p[j * m_ + i];
    return a;
}

void MatrixField::set(std::size_t node, const Matrix& value) {
    if (value.rows() != m_ || value.cols() != n_) throw DimensionError("MatrixField: entry shape mismatch");
    double* p = entries_.data() + node * static_cast<std::size_t>(m_ * n_);
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i < m_; ++i) p[j * m_ + i] = value(i, j);
}

ScalarField::ScalarField(Grid grid) : grid_(std::move(grid)), values_(grid_.node_count(), 0.0) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.node_count()) throw DimensionError("ScalarField: value count does not match node count");
    for (double x : values_)
        if (std::isinf(x)) throw PreconditionError("ScalarField: infinite value");
}

bool ScalarField::valid(std::size_t node) const { return !std::isnan(values_[node]); }

// ---------------------------------------------------------------- operations

MatrixField jacobian_field(const GridMapping& v) {
    const Grid& grid = v.grid();
    const int n = grid.dim();
    const int m = v.m();
    MatrixField out(grid, m, n);
    Matrix d(m, n);
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        for (int a = 0; a < n; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const int i = grid.axis_index(node, a);
            const int count = grid.nodes_per_axis()[ua];
            const std::size_t s = grid.stride(a);
            const double h = grid.spacing()[ua];
            for (int mu = 0; mu < m; ++mu) {
                auto f = [&](std::size_t k) { return v.value(k)[static_cast<std::size_t>(mu)]; };
                double value;
                if (i == 0) {
                    value = (-3.0 * f(node) + 4.0 * f(node + s) - f(node + 2 * s)) / (2.0 * h);
                } else if (i == count - 1) {
                    value = (3.0 * f(node) - 4.0 * f(node - s) + f(node - 2 * s)) / (2.0 * h);
                } else {
                    value = (f(node + s) - f(node - s)) / (2.0 * h);
                }
                d(mu, a) = value;
            }
        }
        out.set(node, d);
    }
    return out;
}

double lp_norm(const ScalarField& f, double p, const CompactSubset& subset) {
    if (!(p >= 1.0)) throw PreconditionError("lp_norm: p must be >= 1");
    const Grid& grid = f.grid();
    const NodeBox box = resolve_subset(grid, subset);
    const std::vector<double> weights = quadrature_weights(grid, subset);
    std::size_t invalid = 0;
    std::vector<double> terms(grid.node_count(), 0.0);
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!box.contains(grid, node)) continue;
        if (!f.valid(node)) {
            ++invalid;
            continue;
        }
        const double a = std::abs(f[node]);
        terms[node] = weights[node] * (p == 1.0 ? a : std::pow(a, p));
    }
    if (invalid > 0) {
        std::ostringstream os;
        os << "lp_norm: " << invalid << " invalid nodes inside the subset";
        throw InvalidNodesError(os.str(), invalid);
    }
    const double s = pairwise_sum(terms);
    return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

double c_norm_distance(const GridMapping& v, const GridMapping& u, const CompactSubset& subset) {
    require_same_grid(v.grid(), u.grid());
    if (v.m() != u.m()) throw DimensionError("c_norm_distance: target dimensions differ");
    const Grid& grid = v.grid();
    const NodeBox box = resolve_subset(grid, subset);
    double best = 0.0;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!box.contains(grid, node)) continue;
        double s = 0.0;
        for (int mu = 0; mu < v.m(); ++mu) {
            const double d = v.value(node)[static_cast<std::size_t>(mu)] - u.value(node)[static_cast<std::size_t>(mu)];
            s += d * d;
        }
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

ScalarField operator_norm_field(const MatrixField& field) {
    ScalarField out(field.grid());
    for (std::size_t node = 0; node < field.size(); ++node) out[node] = operator_norm(field.at(node));
    return out;
}

ScalarField magnitude_field(const GridMapping& v) {
    ScalarField out(v.grid());
    for (std::size_t node = 0; node < v.grid().node_count(); ++node) {
        double s = 0.0;
        for (double x : v.value(node)) s += x * x;
        out[node] = std::sqrt(s);
    }
    return out;
}

double lk_gradient_distance(const GridMapping& v, const GridMapping& u, double k,
                            const CompactSubset& subset) {
    require_same_grid(v.grid(), u.grid());
    if (v.m() != u.m()) throw DimensionError("lk_gradient_distance: target dimensions differ");
    const MatrixField dv = jacobian_field(v);
    const MatrixField du = jacobian_field(u);
    ScalarField diff(v.grid());
    for (std::size_t node = 0; node < dv.size(); ++node) diff[node] = operator_norm(dv.at(node) - du.at(node));
    return lp_norm(diff, k, subset);
}

}  // namespace qcstab
