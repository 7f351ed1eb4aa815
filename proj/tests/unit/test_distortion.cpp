#include "oracles.hpp"
#include "planar_fixtures.hpp"

#include "qcstab/distortion.hpp"
#include "qcstab/error.hpp"
#include "qcstab/families.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace qcstab;

namespace {

GridMapping affine(const Grid& g, double a, double b, double c, double d) {
    return GridMapping::sample(g, 2, [=](std::span<const double> x, std::span<double> o) {
        o[0] = a * x[0] + b * x[1];
        o[1] = c * x[0] + d * x[1];
    });
}

const Grid& unit17() {
    static const Grid g = Grid::uniform(Domain::unit_cube(2), 17);
    return g;
}

}  // namespace

TEST(DistortionField, IdentityIsOneEverywhere) {
    const InstancePair p = InstancePair::distortion_instance(2);
    const DistortionField f = local_distortion_field(p, affine(unit17(), 1, 0, 0, 1), CompactSubset::whole());
    for (std::size_t node = 0; node < unit17().node_count(); ++node) {
        EXPECT_EQ(f.flags[node], NodeFlag::valid);
        EXPECT_NEAR(f.values[node], 1.0, 1e-12);
    }
    EXPECT_NEAR(l1_deviation(f), 0.0, 1e-12);
}

TEST(DistortionField, StretchHasConstantDistortion) {
    const InstancePair p = InstancePair::distortion_instance(2);
    const DistortionField f = local_distortion_field(p, affine(unit17(), 2, 0, 0, 1), CompactSubset::whole());
    for (std::size_t node = 0; node < unit17().node_count(); ++node) EXPECT_NEAR(f.values[node], 2.0, 1e-12);
    EXPECT_NEAR(l1_deviation(f), 1.0, 1e-12);
    const MembershipReport r = classify_membership(p, affine(unit17(), 2, 0, 0, 1), 2.0, CompactSubset::whole());
    EXPECT_TRUE(r.in_class_G_K);
    EXPECT_FALSE(r.in_class_G);
    EXPECT_NEAR(r.ess_sup_K, 2.0, 1e-12);
    EXPECT_NEAR(r.class_G_residual, 2.0, 1e-12);
    EXPECT_FALSE(classify_membership(p, affine(unit17(), 2, 0, 0, 1), 1.5, CompactSubset::whole()).in_class_G_K);
}

TEST(DistortionField, ReflectionIsInvalidAndL1CarriesMeasure) {
    const InstancePair p = InstancePair::distortion_instance(2);
    const DistortionField f = local_distortion_field(p, affine(unit17(), 1, 0, 0, -1), CompactSubset::whole());
    EXPECT_EQ(f.invalid_count(), unit17().node_count());
    for (std::size_t node = 0; node < unit17().node_count(); ++node) EXPECT_TRUE(std::isnan(f.values[node]));
    EXPECT_NEAR(invalid_measure(f), 1.0, 1e-12);
    try {
        l1_deviation(f);
        FAIL() << "expected InvalidNodesError";
    } catch (const InvalidNodesError& e) {
        EXPECT_EQ(e.count(), unit17().node_count());
        EXPECT_NEAR(e.measure(), 1.0, 1e-12);
    }
    const MembershipReport r = classify_membership(p, affine(unit17(), 1, 0, 0, -1), 10.0, CompactSubset::whole());
    EXPECT_FALSE(r.in_class_G_K);
    EXPECT_FALSE(r.l1_deviation.has_value());
    EXPECT_TRUE(nlohmann::json(r).at("l1_deviation").is_null());
}

TEST(DistortionField, ZeroMappingCountsAsUndistorted) {
    const InstancePair p = InstancePair::distortion_instance(2);
    const DistortionField f = local_distortion_field(p, affine(unit17(), 0, 0, 0, 0), CompactSubset::whole());
    for (std::size_t node = 0; node < unit17().node_count(); ++node) EXPECT_EQ(f.values[node], 1.0);
}

TEST(DistortionField, SubsetExcludesBorderNodes) {
    const InstancePair p = InstancePair::distortion_instance(2);
    const DistortionField f = local_distortion_field(p, affine(unit17(), 1, 0, 0, -1), CompactSubset{0.25});
    std::size_t excluded = 0;
    for (auto flag : f.flags) excluded += flag == NodeFlag::boundary_excluded;
    EXPECT_EQ(excluded, 17u * 17u - 9u * 9u);
    EXPECT_NEAR(invalid_measure(f), 0.25, 1e-12);
}

TEST(DistortionField, HolomorphicMappingIsConformal) {
    const Grid g = Grid::uniform(Domain({-1.0, -1.0}, {1.0, 1.0}), 65);
    const std::vector<Complex> coeffs{0.0, 1.0, 0.2};
    const GridMapping v = holomorphic_polynomial(g, coeffs);
    const MembershipReport r =
        classify_membership(InstancePair::distortion_instance(2), v, 1.0 + 1e-3, CompactSubset{0.1});
    EXPECT_TRUE(r.in_class_G_K);
    EXPECT_LT(*r.l1_deviation, 1e-3);
}

TEST(DistortionField, AtLeastOneAndScaleInvariant) {
    const InstancePair p = InstancePair::distortion_instance(2);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto c = fixture::random_piecewise_planar(seed, 17);
        const DistortionField f = local_distortion_field(p, c.mapping, CompactSubset::whole());
        const GridMapping scaled = add_scaled(c.mapping, c.mapping, 2.5);  // 3.5 v
        const DistortionField fs = local_distortion_field(p, scaled, CompactSubset::whole());
        for (std::size_t node = 0; node < f.flags.size(); ++node) {
            if (f.flags[node] != NodeFlag::valid) continue;
            EXPECT_GE(f.values[node], 1.0 - 1e-9);
            EXPECT_NEAR(fs.values[node], f.values[node], 1e-10 * f.values[node]);
        }
    }
}

TEST(DistortionField, MatchesStraightLineOracle) {
    const InstancePair p = InstancePair::distortion_instance(2);
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto c = fixture::random_piecewise_planar(seed, 33, seed % 3 == 0);
        const DistortionField f = local_distortion_field(p, c.mapping, CompactSubset::whole());
        for (int i = 0; i < 33; ++i) {
            for (int j = 0; j < 33; ++j) {
                const std::size_t node = static_cast<std::size_t>(i * 33 + j);
                const double expected = oracle::planar_distortion(oracle::planar_jacobian(c.samples, i, j));
                if (std::isnan(expected)) {
                    EXPECT_EQ(f.flags[node], NodeFlag::invalid_negative_G);
                } else {
                    ASSERT_EQ(f.flags[node], NodeFlag::valid);
                    EXPECT_NEAR(f.values[node], expected, 1e-10 * std::abs(expected));
                }
            }
        }
    }
}

TEST(DistortionField, L1DeviationMatchesFrozenOracle) {
    // v = (x + 0.3 sin y, y + 0.2 x^2) on [0, 1]^2 at 33 nodes; value from an
    // independent numpy computation (np.gradient, trapezoid rule).
    const Grid g = Grid::uniform(Domain::unit_cube(2), 33);
    const GridMapping v = GridMapping::sample(g, 2, [](std::span<const double> x, std::span<double> o) {
        o[0] = x[0] + 0.3 * std::sin(x[1]);
        o[1] = x[1] + 0.2 * x[0] * x[0];
    });
    const DistortionField f = local_distortion_field(InstancePair::distortion_instance(2), v, CompactSubset::whole());
    EXPECT_NEAR(l1_deviation(f), 0.599719061053951, 1e-12);
}

TEST(DistortionField, RejectsMismatchedInstance) {
    const Grid g3 = Grid::uniform(Domain::unit_cube(3), 5);
    const GridMapping v = GridMapping(g3, 3, std::vector<double>(3 * g3.node_count(), 0.0));
    EXPECT_THROW(local_distortion_field(InstancePair::distortion_instance(2), v, CompactSubset::whole()),
                 DimensionError);
    EXPECT_THROW(classify_membership(InstancePair::distortion_instance(2), affine(unit17(), 1, 0, 0, 1), 0.5,
                                     CompactSubset::whole()),
                 PreconditionError);
}

TEST(DistortionField, SpatialStretch) {
    const Grid g3 = Grid::uniform(Domain::unit_cube(3), 9);
    const GridMapping v = GridMapping::sample(g3, 3, [](std::span<const double> x, std::span<double> o) {
        o[0] = 2 * x[0];
        o[1] = x[1];
        o[2] = x[2];
    });
    const DistortionField f = local_distortion_field(InstancePair::distortion_instance(3), v, CompactSubset::whole());
    for (std::size_t node = 0; node < g3.node_count(); ++node) EXPECT_NEAR(f.values[node], 4.0, 1e-12);
}
