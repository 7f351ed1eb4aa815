#pragma once

// Straight-line reference implementations used as test oracles. They share no
// code with the library: plain nested vectors, permutation-sum determinants,
// Jacobi eigenvalues, explicit loops for stencils and quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline double leibniz_det(const Mat& a) {
    const std::size_t n = a.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (perm[i] > perm[j]) ++inversions;
        double prod = inversions % 2 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) prod *= a[i][perm[i]];
        total += prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

/// Submatrix with the given 1-based rows and columns.
inline Mat submatrix(const Mat& a, const std::vector<int>& rows, const std::vector<int>& cols) {
    Mat s(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            s[i][j] = a[static_cast<std::size_t>(rows[i] - 1)][static_cast<std::size_t>(cols[j] - 1)];
    return s;
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double largest_symmetric_eigenvalue(Mat s) {
    const std::size_t n = s.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += s[p][q] * s[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(s[p][q]) < 1e-300) continue;
                const double theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = s[k][p], skq = s[k][q];
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = s[p][k], sqk = s[q][k];
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
            }
        }
    }
    double best = s[0][0];
    for (std::size_t i = 1; i < n; ++i) best = std::max(best, s[i][i]);
    return best;
}

inline double spectral_norm(const Mat& a) {
    const std::size_t m = a.size(), n = a[0].size();
    Mat g(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < m; ++k) g[i][j] += a[k][i] * a[k][j];
    return std::sqrt(std::max(0.0, largest_symmetric_eigenvalue(g)));
}

/// Planar mapping sampled on an N x N lattice, u[i][j] with i along x1.
struct PlanarSamples {
    int nodes;
    double h;
    std::vector<std::vector<double>> v1, v2;
};

/// d/dx along axis `axis` at lattice point (i, j): central inside, one-sided
/// three-point formula at the ends.
inline double derivative(const std::vector<std::vector<double>>& u, int i, int j, int axis, int nodes, double h) {
    auto at = [&](int di) {
        return axis == 0 ? u[static_cast<std::size_t>(i + di)][static_cast<std::size_t>(j)]
                         : u[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + di)];
    };
    const int idx = axis == 0 ? i : j;
    if (idx == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (idx == nodes - 1) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
    return (at(1) - at(-1)) / (2.0 * h);
}

inline Mat planar_jacobian(const PlanarSamples& s, int i, int j) {
    return {{derivative(s.v1, i, j, 0, s.nodes, s.h), derivative(s.v1, i, j, 1, s.nodes, s.h)},
            {derivative(s.v2, i, j, 0, s.nodes, s.h), derivative(s.v2, i, j, 1, s.nodes, s.h)}};
}

/// K = |D|^2 / det D for the planar distortion instance; NaN marks G <= tol < F.
inline double planar_distortion(const Mat& d) {
    const double norm = spectral_norm(d);
    const double f = norm * norm;
    const double g = leibniz_det(d);
    const double tol = 1e-12 * f;
    if (g > tol) return f / g;
    if (f <= tol) return 1.0;
    return std::nan("");
}

/// Trapezoid product rule on an N^d lattice with spacing h: weight h^d times
/// 1/2 per axis on which the index is at an end.
inline double trapezoid_weight(const std::vector<int>& index, int nodes, double h) {
    double w = 1.0;
    for (int i : index) w *= (i == 0 || i == nodes - 1) ? 0.5 * h : h;
    return w;
}

}  // namespace oracle
