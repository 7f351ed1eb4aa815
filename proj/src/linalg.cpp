#include "qcstab/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace qcstab {

namespace {

constexpr double kPowerTolerance = 1e-12;
constexpr int kPowerMaxIterations = 2000;

// Dominant eigenpair of a symmetric positive semidefinite 2x2 matrix.
void dominant_eigen_2x2(double a, double b, double c, double& lambda, Vector& vec) {
    const double half_diff = 0.5 * (a - c);
    const double root = std::hypot(half_diff, b);
    lambda = 0.5 * (a + c) + root;
    vec.resize(2);
    // Two candidate eigenvectors; keep the better-conditioned one.
    const double x1 = b, y1 = lambda - a;
    const double x2 = lambda - c, y2 = b;
    const double n1 = std::hypot(x1, y1);
    const double n2 = std::hypot(x2, y2);
    if (n1 == 0.0 && n2 == 0.0) {
        vec << 1.0, 0.0;
    } else if (n1 >= n2) {
        vec << x1 / n1, y1 / n1;
    } else {
        vec << x2 / n2, y2 / n2;
    }
}

void dominant_eigen_power(const Matrix& gram, double& lambda, Vector& vec) {
    const int d = static_cast<int>(gram.rows());
    // Start from the column of largest norm; it has a component along the
    // dominant eigenvector unless that vector vanishes in the same coordinate.
    int best = 0;
    double best_norm = -1.0;
    for (int j = 0; j < d; ++j) {
        const double nj = gram.col(j).norm();
        if (nj > best_norm) {
            best_norm = nj;
            best = j;
        }
    }
    if (best_norm == 0.0) {
        lambda = 0.0;
        vec = Vector::Unit(d, 0);
        return;
    }
    Vector x = gram.col(best) / best_norm;
    double previous = x.dot(gram * x);
    bool converged = false;
    for (int it = 0; it < kPowerMaxIterations; ++it) {
        Vector y = gram * x;
        const double ny = y.norm();
        if (ny == 0.0) break;
        x = y / ny;
        const double current = x.dot(gram * x);
        if (std::abs(current - previous) <= kPowerTolerance * std::abs(current)) {
            previous = current;
            converged = true;
            break;
        }
        previous = current;
    }
    if (converged) {
        lambda = previous;
        vec = x;
        return;
    }
    // Clustered top of the spectrum; power iteration stalls there.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    lambda = solver.eigenvalues()(d - 1);
    vec = solver.eigenvectors().col(d - 1);
}

}  // namespace

SingularPair top_singular_pair(const Matrix& zeta) {
    const int m = static_cast<int>(zeta.rows());
    const int n = static_cast<int>(zeta.cols());
    SingularPair out;
    if (m == 0 || n == 0) return out;

    const bool use_right = n <= m;  // Gram on the smaller side
    const int d = std::min(m, n);
    double lambda = 0.0;
    Vector vec;
    if (d == 1) {
        lambda = zeta.squaredNorm();
        vec = Vector::Ones(1);
    } else if (d == 2) {
        Matrix gram = use_right ? Matrix(zeta.transpose() * zeta) : Matrix(zeta * zeta.transpose());
        dominant_eigen_2x2(gram(0, 0), gram(0, 1), gram(1, 1), lambda, vec);
    } else {
        Matrix gram = use_right ? Matrix(zeta.transpose() * zeta) : Matrix(zeta * zeta.transpose());
        dominant_eigen_power(gram, lambda, vec);
    }
    lambda = std::max(lambda, 0.0);
    out.sigma = std::sqrt(lambda);

    if (use_right) {
        out.right = vec;
        Vector u = zeta * out.right;
        const double nu = u.norm();
        out.sigma = nu;  // consistent with the returned vectors
        out.left = nu > 0.0 ? Vector(u / nu) : Vector(Vector::Unit(m, 0));
    } else {
        out.left = vec;
        Vector w = zeta.transpose() * out.left;
        const double nw = w.norm();
        out.sigma = nw;
        out.right = nw > 0.0 ? Vector(w / nw) : Vector(Vector::Unit(n, 0));
    }
    return out;
}

double operator_norm(const Matrix& zeta) {
    const int m = static_cast<int>(zeta.rows());
    const int n = static_cast<int>(zeta.cols());
    if (std::min(m, n) == 1) return zeta.norm();
    if (std::min(m, n) == 2) {
        Matrix gram = n <= m ? Matrix(zeta.transpose() * zeta) : Matrix(zeta * zeta.transpose());
        double lambda = 0.0;
        Vector unused;
        dominant_eigen_2x2(gram(0, 0), gram(0, 1), gram(1, 1), lambda, unused);
        return std::sqrt(std::max(lambda, 0.0));
    }
    return top_singular_pair(zeta).sigma;
}

double determinant(const Matrix& a) {
    switch (a.rows()) {
        case 0:
            return 1.0;
        case 1:
            return a(0, 0);
        case 2:
            return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        case 3:
            return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                   a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                   a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        default:
            return Eigen::PartialPivLU<Matrix>(a).determinant();
    }
}

Matrix cofactor(const Matrix& a) {
    const int k = static_cast<int>(a.rows());
    Matrix cof(k, k);
    if (k == 1) {
        cof(0, 0) = 1.0;
        return cof;
    }
    Matrix sub(k - 1, k - 1);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            for (int r = 0, rr = 0; r < k; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < k; ++c) {
                    if (c == j) continue;
                    sub(rr, cc) = a(r, c);
                    ++cc;
                }
                ++rr;
            }
            cof(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * determinant(sub);
        }
    }
    return cof;
}

}  // namespace qcstab
