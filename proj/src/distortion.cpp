#include "qcstab/distortion.hpp"

#include "qcstab/error.hpp"
#include "qcstab/linalg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcstab {

std::string to_string(NodeFlag flag) {
    switch (flag) {
        case NodeFlag::valid: return "valid";
        case NodeFlag::invalid_negative_G: return "invalid_negative_G";
        case NodeFlag::boundary_excluded: return "boundary_excluded";
    }
    return "valid";
}

std::size_t DistortionField::invalid_count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), NodeFlag::invalid_negative_G));
}

namespace {

void check_pair_fits(const InstancePair& pair, const GridMapping& v) {
    if (v.grid().dim() != pair.n() || v.m() != pair.m()) {
        std::ostringstream os;
        os << "instance expects mappings R^" << pair.n() << " -> R^" << pair.m() << ", got R^" << v.grid().dim()
           << " -> R^" << v.m();
        throw DimensionError(os.str());
    }
}

}  // namespace

DistortionField local_distortion_field(const InstancePair& pair, const GridMapping& v, const CompactSubset& subset,
                                       double relative_tolerance) {
    check_pair_fits(pair, v);
    const Grid& grid = v.grid();
    const NodeBox box = resolve_subset(grid, subset);
    const MatrixField jac = jacobian_field(v);
    DistortionField out{ScalarField(grid), std::vector<NodeFlag>(grid.node_count(), NodeFlag::boundary_excluded),
                        subset, relative_tolerance};
    const double k = pair.k();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!box.contains(grid, node)) {
            out.values[node] = nan;
            continue;
        }
        const Matrix d = jac.at(node);
        const double f = pair.f()(d);
        const double g = evaluate_nl(pair.g(), d);
        const double scale = std::pow(operator_norm(d), k);
        const double tol = relative_tolerance * scale;
        if (g > tol) {
            out.values[node] = f / g;
            out.flags[node] = NodeFlag::valid;
        } else if (f <= tol) {
            out.values[node] = 1.0;
            out.flags[node] = NodeFlag::valid;
        } else {
            out.values[node] = nan;
            out.flags[node] = NodeFlag::invalid_negative_G;
        }
    }
    return out;
}

double invalid_measure(const DistortionField& field) {
    const std::vector<double> w = quadrature_weights(field.values.grid(), field.subset);
    std::vector<double> terms(w.size(), 0.0);
    for (std::size_t node = 0; node < w.size(); ++node)
        if (field.flags[node] == NodeFlag::invalid_negative_G) terms[node] = w[node];
    return pairwise_sum(terms);
}

double l1_deviation(const DistortionField& field) {
    const std::size_t invalid = field.invalid_count();
    if (invalid > 0) {
        const double measure = invalid_measure(field);
        std::ostringstream os;
        os << "l1_deviation: " << invalid << " nodes outside the class F (G <= 0 < F), measure " << measure;
        throw InvalidNodesError(os.str(), invalid, measure);
    }
    ScalarField shifted(field.values.grid());
    for (std::size_t node = 0; node < field.flags.size(); ++node)
        shifted[node] = field.flags[node] == NodeFlag::valid ? field.values[node] - 1.0 : 0.0;
    return lp_norm(shifted, 1.0, field.subset);
}

MembershipReport classify_membership(const InstancePair& pair, const GridMapping& v, double K_bound,
                                     const CompactSubset& subset, double tolerance) {
    if (!(K_bound >= 1.0)) throw PreconditionError("classify_membership: K_bound must be >= 1");
    check_pair_fits(pair, v);
    const DistortionField field = local_distortion_field(pair, v, subset);
    const Grid& grid = v.grid();
    const MatrixField jac = jacobian_field(v);
    const std::vector<double> w = quadrature_weights(grid, subset);

    MembershipReport r;
    r.K_bound = K_bound;
    r.tolerance = tolerance;
    r.subset_measure = pairwise_sum(w);
    std::vector<double> residual(grid.node_count(), 0.0);
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (w[node] == 0.0 && field.flags[node] == NodeFlag::boundary_excluded) continue;
        const Matrix d = jac.at(node);
        residual[node] = w[node] * std::abs(pair.f()(d) - evaluate_nl(pair.g(), d));
        if (field.flags[node] == NodeFlag::valid) r.ess_sup_K = std::max(r.ess_sup_K, field.values[node]);
    }
    r.class_G_residual = pairwise_sum(residual);
    r.invalid_measure = invalid_measure(field);
    if (field.invalid_count() == 0) r.l1_deviation = l1_deviation(field);
    r.in_class_G_K = field.invalid_count() == 0 && r.ess_sup_K < K_bound + tolerance;
    r.in_class_G = r.in_class_G_K && r.class_G_residual <= tolerance * r.subset_measure;
    return r;
}

void to_json(nlohmann::json& j, const MembershipReport& r) {
    j = nlohmann::json::object();
    j["class_G_residual"] = r.class_G_residual;
    j["ess_sup_K"] = r.ess_sup_K;
    j["l1_deviation"] = r.l1_deviation ? nlohmann::json(*r.l1_deviation) : nlohmann::json(nullptr);
    j["invalid_measure"] = r.invalid_measure;
    j["subset_measure"] = r.subset_measure;
    j["K_bound"] = r.K_bound;
    j["tolerance"] = r.tolerance;
    j["in_class_G_K"] = r.in_class_G_K;
    j["in_class_G"] = r.in_class_G;
}

}  // namespace qcstab
