#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace qcstab {

/// Largest supported m, n. Matrices live on the stack up to this size.
inline constexpr int kMaxDim = 8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Summation by recursive halving in fixed index order. Results depend only on
/// the input sequence, never on how the terms were produced.
double pairwise_sum(std::span<const double> terms);

inline double frobenius_norm(const Matrix& a) { return a.norm(); }

}  // namespace qcstab
