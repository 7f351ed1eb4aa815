#pragma once

#include "qcstab/grid.hpp"
#include "qcstab/integrand.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qcstab {

/// Discrete Morrey excess E(phi) = int_U F(zeta + phi') - |U| F(zeta) on the
/// unit cube. phi is continuous and multilinear on each grid cell with zero
/// boundary values; the integral uses 2^n-point Gauss quadrature per cell, which
/// is exact for every minor of the cellwise gradient when n <= 4. Consequently
/// null Lagrangians have discrete excess zero up to rounding, and convex F have
/// nonnegative discrete excess.
class CellwiseExcess {
public:
    CellwiseExcess(const Integrand& f, Matrix zeta, int resolution);

    int parameter_count() const noexcept { return static_cast<int>(interior_.size()) * m_; }
    const Grid& grid() const noexcept { return grid_; }

    double excess(std::span<const double> params) const;
    /// Returns E and writes dE/dparams (exact chain rule through the cell stencils).
    double excess_and_gradient(std::span<const double> params, std::span<double> grad) const;

    /// |phi'| at every Gauss point with its quadrature weight.
    void gauss_gradient_norms(std::span<const double> params, std::vector<double>& norms,
                              std::vector<double>& weights) const;

    GridMapping to_mapping(std::span<const double> params) const;
    std::vector<double> from_mapping(const GridMapping& phi) const;

private:
    void scatter(std::span<const double> params, std::vector<double>& full) const;
    Matrix cell_gradient(const std::vector<double>& full, std::size_t base, int gauss) const;

    const Integrand& f_;
    Matrix zeta_;
    double f_zeta_;
    Grid grid_;
    int n_;
    int m_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> cell_base_;
    std::vector<std::size_t> corner_offset_;
    std::vector<double> shape_grad_;  // [gauss][corner][axis]
    double gauss_weight_;
};

struct QcSearchOptions {
    int resolution = 33;         // nodes per axis, >= 9
    int budget = 200;            // descent iterations per start
    int starts = 8;              // start 0 is phi = 0
    std::uint64_t seed = 0;
    int threads = 1;
    double start_amplitude = 0.1;
    // The violation search only visits phi whose lattice difference quotients
    // stay below slope_cap * (1 + |zeta|). Without a cap the excess of a
    // non-quasiconvex F is typically unbounded below and the descent diverges.
    double slope_cap = 10.0;
};

struct QcSearchResult {
    double best_excess = 0.0;   // <= 0; negative is a violation certificate up to discretization
    int best_start = 0;
    GridMapping phi;
    std::vector<double> start_excess;
};

/// Seeded multi-start descent on E over interior node values. The result is
/// the lexicographic minimum of (excess, start index).
QcSearchResult quasiconvexity_violation_search(const Integrand& f, const Matrix& zeta, const QcSearchOptions& options);

struct StrictProbeResult {
    double delta_estimate = 0.0;
    int best_start = 0;
    int feasible_starts = 0;
    GridMapping phi;
    double large_gradient_measure = 0.0;  // |{|phi'| >= eps}|
    double gradient_lk_norm = 0.0;        // ||phi'||_{L^k}
};

/// Minimal excess over phi with ||phi'||_{L^k} <= C |U|^{1/k} and
/// |{|phi'| >= eps}| > eps |U|: an empirical upper bound for delta(zeta, eps, C).
/// Throws InfeasibleError when eps^{k+1} >= C^k or no start reaches the
/// constraint set.
StrictProbeResult strict_qc_probe(const Integrand& f, const Matrix& zeta, double epsilon, double c_bound,
                                  const QcSearchOptions& options);

}  // namespace qcstab
