#include "qcstab/error.hpp"
#include "qcstab/families.hpp"
#include "qcstab/qc_search.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qcstab;

namespace {

QcSearchOptions small_options(int starts = 4, int budget = 100) {
    QcSearchOptions o;
    o.resolution = 17;
    o.budget = budget;
    o.starts = starts;
    o.seed = 11;
    return o;
}

Matrix sample_zeta() {
    Matrix z(2, 2);
    z << 1.1, -0.4, 0.3, 0.8;
    return z;
}

}  // namespace

TEST(CellwiseExcess, NullLagrangianHasZeroExcessOnRandomPerturbations) {
    const Integrand det = Integrand::from_null_lagrangian(NullLagrangian::determinant(2));
    const CellwiseExcess e(det, sample_zeta(), 9);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> p(static_cast<std::size_t>(e.parameter_count()));
    for (int trial = 0; trial < 10; ++trial) {
        for (double& x : p) x = u(rng);
        EXPECT_NEAR(e.excess(p), 0.0, 1e-13);
    }
}

TEST(CellwiseExcess, ConvexIntegrandHasNonnegativeExcess) {
    const Integrand f = Integrand::frobenius_power(2, 2, 2);
    const CellwiseExcess e(f, sample_zeta(), 9);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> p(static_cast<std::size_t>(e.parameter_count()));
    for (int trial = 0; trial < 10; ++trial) {
        for (double& x : p) x = u(rng);
        EXPECT_GE(e.excess(p), -1e-13);
    }
}

TEST(CellwiseExcess, GradientMatchesFiniteDifferences) {
    const Integrand f = Integrand::operator_norm_power(2, 2, 3);
    const CellwiseExcess e(f, sample_zeta(), 9);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::vector<double> p(static_cast<std::size_t>(e.parameter_count())), g(p.size());
    for (double& x : p) x = u(rng);
    e.excess_and_gradient(p, g);
    for (std::size_t i = 0; i < p.size(); i += 7) {
        auto plus = p, minus = p;
        plus[i] += 1e-6;
        minus[i] -= 1e-6;
        EXPECT_NEAR(g[i], (e.excess(plus) - e.excess(minus)) / 2e-6, 1e-6 * (1 + std::abs(g[i])));
    }
}

TEST(CellwiseExcess, MappingRoundTrip) {
    const Integrand f = Integrand::frobenius_power(2, 2, 2);
    const CellwiseExcess e(f, sample_zeta(), 9);
    const GridMapping phi = random_bump_test_function(e.grid(), 2, 5);
    const auto params = e.from_mapping(phi);
    const GridMapping back = e.to_mapping(params);
    EXPECT_EQ(back.values(), phi.values());
}

TEST(QcSearch, ZeroBudgetReturnsZeroPerturbation) {
    QcSearchOptions o = small_options();
    o.budget = 0;
    const QcSearchResult r = quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2, -1.0), sample_zeta(), o);
    EXPECT_EQ(r.best_excess, 0.0);
    EXPECT_EQ(r.best_start, 0);
    for (double x : r.phi.values()) EXPECT_EQ(x, 0.0);
}

TEST(QcSearch, DeterminantAndConvexFindNoViolation) {
    const QcSearchOptions o = small_options(6, 100);
    const auto det = quasiconvexity_violation_search(
        Integrand::from_null_lagrangian(NullLagrangian::determinant(2)), sample_zeta(), o);
    EXPECT_GE(det.best_excess, -1e-8);
    EXPECT_LE(det.best_excess, 0.0);
    const auto convex = quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2), sample_zeta(), o);
    EXPECT_GE(convex.best_excess, -1e-8);
    EXPECT_LE(convex.best_excess, 0.0);
    EXPECT_EQ(det.start_excess.size(), 6u);
}

TEST(QcSearch, ConcaveIntegrandIsCaught) {
    const auto r = quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2, -1.0),
                                                   Matrix::Identity(2, 2), small_options(2, 200));
    EXPECT_LE(r.best_excess, -0.01);
    EXPECT_TRUE(std::isfinite(r.best_excess));
}

TEST(QcSearch, ResultIndependentOfThreadCount) {
    QcSearchOptions o = small_options(4, 40);
    const Integrand f = Integrand::operator_norm_power(2, 2, 2, -1.0);
    const auto serial = quasiconvexity_violation_search(f, sample_zeta(), o);
    o.threads = 3;
    const auto threaded = quasiconvexity_violation_search(f, sample_zeta(), o);
    EXPECT_EQ(serial.best_excess, threaded.best_excess);
    EXPECT_EQ(serial.best_start, threaded.best_start);
    EXPECT_EQ(serial.start_excess, threaded.start_excess);
    EXPECT_EQ(serial.phi.values(), threaded.phi.values());
}

TEST(QcSearch, RejectsBadOptions) {
    QcSearchOptions o = small_options();
    o.resolution = 5;
    EXPECT_THROW(quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2), sample_zeta(), o),
                 PreconditionError);
    o = small_options();
    o.starts = 0;
    EXPECT_THROW(quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2), sample_zeta(), o),
                 PreconditionError);
    EXPECT_THROW(quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2), Matrix::Identity(3, 3),
                                                 small_options()),
                 DimensionError);
}

TEST(StrictProbe, StrictlyConvexHasPositiveDelta) {
    const auto r = strict_qc_probe(Integrand::frobenius_power(2, 2, 2), Matrix::Zero(2, 2), 0.1, 2.0,
                                   small_options(4, 150));
    EXPECT_GT(r.delta_estimate, 0.0);
    EXPECT_GT(r.feasible_starts, 0);
    EXPECT_GT(r.large_gradient_measure, 0.1);
    EXPECT_LE(r.gradient_lk_norm, 2.0 + 1e-9);
}

TEST(StrictProbe, NullLagrangianHasDeltaNearZero) {
    const auto r = strict_qc_probe(Integrand::from_null_lagrangian(NullLagrangian::determinant(2)),
                                   Matrix::Zero(2, 2), 0.1, 2.0, small_options(4, 150));
    EXPECT_NEAR(r.delta_estimate, 0.0, 1e-10);
}

TEST(StrictProbe, InfeasibleConstraints) {
    // eps^{k+1} >= C^k leaves no admissible phi.
    EXPECT_THROW(strict_qc_probe(Integrand::frobenius_power(2, 2, 2), Matrix::Zero(2, 2), 0.9, 0.5, small_options()),
                 InfeasibleError);
}
