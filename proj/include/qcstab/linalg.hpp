#pragma once

#include "qcstab/matrix.hpp"

namespace qcstab {

/// Largest singular value with unit singular vectors, zeta * v = sigma * u.
struct SingularPair {
    double sigma = 0.0;
    Vector left;
    Vector right;
};

/// Top singular triple of a matrix. Closed form when min(m, n) <= 2, power
/// iteration on the smaller Gram matrix otherwise.
SingularPair top_singular_pair(const Matrix& zeta);

/// Operator norm |zeta| = sup{|zeta x| : |x| < 1}.
double operator_norm(const Matrix& zeta);

/// Determinant of a square matrix: closed forms up to 3x3, LU with partial
/// pivoting beyond.
double determinant(const Matrix& a);

/// Cofactor matrix, d det(a) / d a.
Matrix cofactor(const Matrix& a);

}  // namespace qcstab
