#include "qcstab/error.hpp"
#include "qcstab/integrand.hpp"
#include "qcstab/linalg.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

using namespace qcstab;

namespace {

Matrix random_matrix(int m, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    return a;
}

}  // namespace

TEST(Integrand, BuiltInValues) {
    Matrix z(2, 2);
    z << 3, 0, 0, 4;
    EXPECT_DOUBLE_EQ(Integrand::operator_norm_power(2, 2, 2)(z), 16.0);
    EXPECT_DOUBLE_EQ(Integrand::frobenius_power(2, 2, 2)(z), 25.0);
    EXPECT_DOUBLE_EQ(Integrand::frobenius_power(2, 2, 1, 2.0, 1.0)(z), 11.0);
    EXPECT_DOUBLE_EQ(Integrand::from_null_lagrangian(NullLagrangian::determinant(2), 0.5)(z), 6.0);
    EXPECT_THROW(Integrand::operator_norm_power(2, 2, 0.0), PreconditionError);
    EXPECT_THROW(Integrand::operator_norm_power(2, 2, 2)(Matrix::Identity(3, 3)), DimensionError);
}

TEST(Integrand, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(6);
    const Integrand cases[] = {Integrand::operator_norm_power(3, 2, 3), Integrand::frobenius_power(3, 2, 2.5),
                               Integrand::from_null_lagrangian(NullLagrangian::single_minor(
                                   3, 2, MultiIndex({1, 2}, 2), MultiIndex({1, 3}, 3), 1.7))};
    for (const Integrand& f : cases) {
        const Matrix z = random_matrix(2, 3, rng);
        const Matrix g = f.gradient(z);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 3; ++j) {
                Matrix p = z, q = z;
                p(i, j) += 1e-6;
                q(i, j) -= 1e-6;
                EXPECT_NEAR(g(i, j), (f(p) - f(q)) / 2e-6, 1e-6) << f.name();
            }
        }
    }
}

TEST(Integrand, ScaledAndShifted) {
    std::mt19937_64 rng(3);
    const Integrand f = Integrand::frobenius_power(2, 2, 2, 1.5, 0.25);
    const Matrix z = random_matrix(2, 2, rng);
    EXPECT_NEAR(f.scaled(-2.0)(z), -2.0 * f(z), 1e-14);
    EXPECT_NEAR(f.shifted(3.0)(z), f(z) + 3.0, 1e-14);
}

TEST(Integrand, JsonRoundTrip) {
    const Integrand f = Integrand::from_null_lagrangian(NullLagrangian::determinant(3), 2.0, 0.5);
    const nlohmann::json j = f;
    const Integrand back = integrand_from_json(j);
    std::mt19937_64 rng(9);
    const Matrix z = random_matrix(3, 3, rng);
    EXPECT_EQ(back(z), f(z));
    EXPECT_THROW(integrand_from_json(nlohmann::json{{"kind", "mystery"}}), FormatError);
    EXPECT_THROW(nlohmann::json(Integrand::custom(2, 2, 2, [](const Matrix&) { return 0.0; })), FormatError);

    const InstancePair p = InstancePair::distortion_instance(2);
    const InstancePair p2 = instance_from_json(nlohmann::json(p));
    EXPECT_EQ(p2.f()(z.topLeftCorner(2, 2)), p.f()(z.topLeftCorner(2, 2)));
}

TEST(InstancePair, Validation) {
    EXPECT_THROW(InstancePair(Integrand::operator_norm_power(2, 2, 3), NullLagrangian::determinant(2)),
                 DimensionError);
    EXPECT_THROW(InstancePair(Integrand::operator_norm_power(2, 2, 2), NullLagrangian(2, 2, 2, 1.0, {})),
                 PreconditionError);
    EXPECT_THROW(InstancePair(Integrand::operator_norm_power(2, 2, 2), NullLagrangian(2, 2, 2, 0.0, {})),
                 PreconditionError);
}

TEST(Homogeneity, BuiltInsAreExactAndOffsetIsDetected) {
    EXPECT_LT(check_homogeneity(Integrand::operator_norm_power(3, 3, 3), 500, 1), 1e-13);
    EXPECT_LT(check_homogeneity(Integrand::frobenius_power(2, 4, 2.5), 500, 2), 1e-13);
    EXPECT_LT(check_homogeneity(Integrand::from_null_lagrangian(NullLagrangian::determinant(4)), 500, 3), 1e-12);
    EXPECT_GT(check_homogeneity(Integrand::operator_norm_power(2, 2, 2, 1.0, 0.1), 100, 1), 1e-3);
    EXPECT_THROW(check_homogeneity(Integrand::operator_norm_power(2, 2, 2), 0, 1), PreconditionError);
}

TEST(HypothesisConstants, PlanarDistortionInstance) {
    const InstancePair p = InstancePair::distortion_instance(2);
    EXPECT_NEAR(estimate_h4_constant(p, 20000, 1), 1.0, 1e-3);
    EXPECT_NEAR(estimate_cF(p.f(), 20000, 1), 1.0, 1e-3);
    EXPECT_GE(estimate_h4_constant(p, 2000, 5), 1.0 - 1e-12);
}

TEST(HypothesisConstants, ScaleCovariance) {
    const InstancePair p(Integrand::operator_norm_power(2, 2, 2, 2.0), NullLagrangian::determinant(2));
    EXPECT_NEAR(estimate_h4_constant(p, 20000, 1), 2.0, 2e-3);
    const InstancePair frob(Integrand::frobenius_power(2, 2, 2), NullLagrangian::determinant(2));
    EXPECT_NEAR(estimate_h4_constant(frob, 20000, 1), 2.0, 2e-3);
    EXPECT_NEAR(estimate_cF(Integrand::frobenius_power(2, 2, 2, 3.0), 20000, 1), 3.0, 3e-3);
}

TEST(HypothesisConstants, NegativeDeterminantSide) {
    // G = -det is positive on orientation-reversing matrices, where |z|^2 >= -det z with equality on anticonformal ones.
    const InstancePair p(Integrand::operator_norm_power(2, 2, 2), NullLagrangian::determinant(2).scaled(-1.0));
    EXPECT_NEAR(estimate_h4_constant(p, 20000, 2), 1.0, 1e-3);
}

TEST(HypothesisConstants, DeterministicForSeed) {
    const InstancePair p = InstancePair::distortion_instance(2);
    EXPECT_EQ(estimate_h4_constant(p, 3000, 42), estimate_h4_constant(p, 3000, 42));
    EXPECT_THROW(estimate_h4_constant(p, 0, 1), PreconditionError);
    const HypothesisReport r = check_hypotheses(p, 2000, 7);
    EXPECT_EQ(r.sample_count, 2000);
    EXPECT_EQ(r.refinement_iterations, kSphereRefinementSteps);
    EXPECT_LT(r.h3_max_relative_error, 1e-13);
}

TEST(RankOne, ConvexAndAffineHaveNoViolations) {
    EXPECT_TRUE(rank_one_convexity_test(Integrand::operator_norm_power(2, 2, 2), 2000, 1).violations.empty());
    const RankOneReport det = rank_one_convexity_test(Integrand::from_null_lagrangian(NullLagrangian::determinant(3)), 2000, 1);
    EXPECT_TRUE(det.violations.empty());
    EXPECT_LT(det.max_abs_defect, 1e-12);
}

TEST(RankOne, ConcaveIntegrandIsCaught) {
    const RankOneReport r = rank_one_convexity_test(Integrand::frobenius_power(2, 2, 2, -1.0), 500, 1);
    EXPECT_EQ(r.samples, 500);
    ASSERT_FALSE(r.violations.empty());
    for (const auto& v : r.violations) {
        const double expected = -v.t * v.t * v.a.squaredNorm() * v.b.squaredNorm();
        EXPECT_NEAR(v.defect, expected, 1e-12);
    }
    EXPECT_LT(r.min_defect, 0.0);
}
