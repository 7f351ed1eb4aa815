#pragma once

#include "qcstab/grid.hpp"
#include "qcstab/integrand.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace qcstab {

enum class NodeFlag : unsigned char {
    valid,
    invalid_negative_G,  // F > f_zero_tol while G <= g_pos_tol: outside the class F
    boundary_excluded,   // outside the requested subset
};

std::string to_string(NodeFlag flag);

/// K(x, v) per node. K = F/G where G > g_pos_tol, K = 1 where F <= f_zero_tol;
/// the remaining nodes are flagged and carry NaN.
struct DistortionField {
    ScalarField values;
    std::vector<NodeFlag> flags;
    CompactSubset subset;
    double relative_tolerance = 1e-12;  // both thresholds are this times |v'|^k

    std::size_t invalid_count() const;
};

inline constexpr double kDefaultThresholdScale = 1e-12;

DistortionField local_distortion_field(const InstancePair& pair, const GridMapping& v, const CompactSubset& subset,
                                       double relative_tolerance = kDefaultThresholdScale);

/// Measure (quadrature weight) of the invalid_negative_G nodes.
double invalid_measure(const DistortionField& field);

/// ||K(., v) - 1||_{L^1} over the field's subset. Throws InvalidNodesError
/// carrying the invalid measure when the class-F condition fails somewhere.
double l1_deviation(const DistortionField& field);

struct MembershipReport {
    double class_G_residual = 0.0;        // L^1 over U of |F(v') - G(v')|
    double ess_sup_K = 0.0;               // max over valid nodes
    std::optional<double> l1_deviation;   // absent when invalid nodes exist
    double invalid_measure = 0.0;
    double subset_measure = 0.0;
    double K_bound = 1.0;
    double tolerance = 0.0;
    bool in_class_G_K = false;
    bool in_class_G = false;
};

inline constexpr double kMembershipTolerance = 1e-8;

/// v in G(K_bound) iff invalid_measure = 0 and ess_sup_K < K_bound + tol;
/// v in G iff additionally class_G_residual <= tol |U|.
MembershipReport classify_membership(const InstancePair& pair, const GridMapping& v, double K_bound,
                                     const CompactSubset& subset, double tolerance = kMembershipTolerance);

void to_json(nlohmann::json& j, const MembershipReport& r);

}  // namespace qcstab
