#include "qcstab/stability.hpp"

#include "qcstab/io.hpp"
#include "qcstab/linalg.hpp"
#include "qcstab/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace qcstab {

// ---------------------------------------------------------------- projection

bool has_planar_projector(const InstancePair& pair) {
    if (pair.n() != 2 || pair.m() != 2 || pair.k() != 2) return false;
    const NullLagrangian& g = pair.g();
    if (g.terms().size() != 1) return false;
    const auto& term = g.terms().front();
    const double c = term.gamma;
    if (!(c > 0.0)) return false;
    const Integrand& f = pair.f();
    if (f.offset() != 0.0) return false;
    if (f.kind() == IntegrandKind::operator_norm_power) return f.scale() == c;
    if (f.kind() == IntegrandKind::frobenius_power) return f.scale() == 0.5 * c;
    return false;
}

std::vector<double> ProjectionResult::basis_coefficients() const {
    std::vector<double> out;
    for (const Complex& c : coefficients) {
        out.push_back(c.real());
        out.push_back(c.imag());
    }
    return out;
}

ProjectionResult project_to_class(const InstancePair& pair, const GridMapping& v, int degree,
                                  const CompactSubset& subset) {
    if (!has_planar_projector(pair))
        throw UnsupportedInstanceError("project_to_class: no projector registered for this instance");
    if (degree < 1) throw PreconditionError("project_to_class: degree must be >= 1");
    if (v.grid().dim() != 2 || v.m() != 2) throw DimensionError("project_to_class: expects planar mappings");
    const Grid& grid = v.grid();
    const NodeBox box = resolve_subset(grid, subset);

    std::vector<std::size_t> nodes;
    for (std::size_t node = 0; node < grid.node_count(); ++node)
        if (box.contains(grid, node)) nodes.push_back(node);
    const int cols = degree + 1;
    Eigen::MatrixXcd design(static_cast<Eigen::Index>(nodes.size()), cols);
    Eigen::VectorXcd rhs(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        const Complex z(grid.coordinate(nodes[r], 0), grid.coordinate(nodes[r], 1));
        Complex p = 1.0;
        for (int j = 0; j < cols; ++j) {
            design(static_cast<Eigen::Index>(r), j) = p;
            p *= z;
        }
        const auto val = v.value(nodes[r]);
        rhs(static_cast<Eigen::Index>(r)) = Complex(val[0], val[1]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
    if (qr.rank() < cols) {
        std::ostringstream os;
        os << "project_to_class: design of degree " << degree << " has rank " << qr.rank() << " on " << nodes.size()
           << " nodes";
        throw DegenerateFitError(os.str());
    }
    const Eigen::VectorXcd c = qr.solve(rhs);
    ProjectionResult out{holomorphic_polynomial(grid, std::vector<Complex>(c.data(), c.data() + c.size())), 0.0, 0.0,
                         std::vector<Complex>(c.data(), c.data() + c.size())};
    out.distance_C = c_norm_distance(v, out.u, subset);
    out.distance_W = out.distance_C + lk_gradient_distance(v, out.u, pair.k(), subset);
    return out;
}

ProjectionResult distance_to_candidates(const InstancePair& pair, const GridMapping& v,
                                        std::span<const GridMapping> candidates, const CompactSubset& subset) {
    if (candidates.empty()) throw PreconditionError("distance_to_candidates: no candidates");
    std::size_t best = 0;
    double best_c = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = c_norm_distance(v, candidates[i], subset);
        if (d < best_c) {
            best_c = d;
            best = i;
        }
    }
    ProjectionResult out{candidates[best], best_c, 0.0, {}};
    out.distance_W = best_c + lk_gradient_distance(v, candidates[best], pair.k(), subset);
    return out;
}

// ---------------------------------------------------------------- curves

StabilityCurve stability_curve(const MappingFamily& family, std::span<const double> t_values, int degree,
                               const CompactSubset& subset, int threads) {
    if (t_values.empty()) throw PreconditionError("stability_curve: empty t schedule");
    if (t_values.front() != 0.0) throw PreconditionError("stability_curve: the schedule must start at t = 0");
    for (std::size_t i = 1; i < t_values.size(); ++i)
        if (!(t_values[i] > t_values[i - 1])) throw PreconditionError("stability_curve: t values must increase");

    const InstancePair& pair = family.instance();
    struct Slot {
        std::optional<StabilityRow> row;
        std::string error;
    };
    std::vector<Slot> slots(t_values.size());
    parallel_for(slots.size(), threads, [&](std::size_t i) {
        const double t = t_values[i];
        const GridMapping v = family.at(t);
        const DistortionField field = local_distortion_field(pair, v, CompactSubset::whole());
        if (field.invalid_count() > 0) {
            std::ostringstream os;
            os << "stability_curve: v_t leaves the class F at t=" << format_number(t) << " (" << field.invalid_count()
               << " nodes with G <= 0 < F)";
            slots[i].error = os.str();
            return;
        }
        StabilityRow row;
        row.t = t;
        row.epsilon = l1_deviation(field);
        for (std::size_t node = 0; node < field.flags.size(); ++node)
            if (field.flags[node] == NodeFlag::valid) row.ess_sup_K = std::max(row.ess_sup_K, field.values[node]);
        const ProjectionResult proj = project_to_class(pair, v, degree, subset);
        row.dist_C = proj.distance_C;
        row.dist_W = proj.distance_W;
        slots[i].row = row;
    });

    StabilityCurve curve{{}, subset, degree};
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i].row) throw CurveAbortedError(slots[i].error, t_values[i], curve);
        curve.rows.push_back(*slots[i].row);
    }
    return curve;
}

void write_stability_csv(std::ostream& out, const StabilityCurve& curve) {
    out << "t,epsilon_l1,dist_C,dist_W1k,ess_sup_K,fit_degree\n";
    for (const StabilityRow& r : curve.rows) {
        out << format_number(r.t) << ',' << format_number(r.epsilon) << ',' << format_number(r.dist_C) << ','
            << format_number(r.dist_W) << ',' << format_number(r.ess_sup_K) << ',' << curve.projection_degree << '\n';
    }
}

// ---------------------------------------------------------------- integrals

namespace {

double weighted_integral(const ScalarField& eta, const std::vector<double>& weights, const MatrixField& jac,
                         const std::function<double(const Matrix&)>& f) {
    std::vector<double> terms(weights.size(), 0.0);
    for (std::size_t node = 0; node < weights.size(); ++node) {
        const double e = eta[node];
        if (e == 0.0 || weights[node] == 0.0) continue;
        terms[node] = weights[node] * e * f(jac.at(node));
    }
    return pairwise_sum(terms);
}

double vector_l1_distance(const GridMapping& a, const GridMapping& b) {
    const std::vector<double> w = quadrature_weights(a.grid(), CompactSubset::whole());
    std::vector<double> terms(w.size());
    for (std::size_t node = 0; node < w.size(); ++node) {
        double s = 0.0;
        for (int mu = 0; mu < a.m(); ++mu) {
            const double d = a.value(node)[static_cast<std::size_t>(mu)] - b.value(node)[static_cast<std::size_t>(mu)];
            s += d * d;
        }
        terms[node] = w[node] * std::sqrt(s);
    }
    return pairwise_sum(terms);
}

void check_sequence_shape(std::span<const GridMapping> sequence, const GridMapping& limit, const char* where) {
    if (sequence.empty()) throw PreconditionError(std::string(where) + ": empty sequence");
    for (const auto& v : sequence) {
        require_same_grid(v.grid(), limit.grid());
        if (v.m() != limit.m()) throw DimensionError(std::string(where) + ": target dimensions differ");
    }
}

}  // namespace

SemicontinuityReport semicontinuity_check(const InstancePair& pair, std::span<const GridMapping> sequence,
                                          const GridMapping& limit, const ScalarField& eta,
                                          const SemicontinuityOptions& options) {
    check_sequence_shape(sequence, limit, "semicontinuity_check");
    const Grid& grid = limit.grid();
    require_same_grid(eta.grid(), grid);
    if (grid.dim() != pair.n() || limit.m() != pair.m()) throw DimensionError("semicontinuity_check: instance shape differs");
    double limit_scale = 0.0;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        if (!eta.valid(node) || eta[node] < 0.0) throw PreconditionError("semicontinuity_check: eta must be nonnegative");
        if (grid.on_boundary(node) && eta[node] != 0.0)
            throw PreconditionError("semicontinuity_check: eta must vanish on the boundary");
        if (eta[node] > 0.0)
            for (double x : limit.value(node)) limit_scale = std::max(limit_scale, std::abs(x));
    }

    SemicontinuityReport r;
    r.tolerance = options.tolerance;
    for (const auto& v : sequence) {
        double d = 0.0;
        for (std::size_t node = 0; node < grid.node_count(); ++node) {
            if (eta[node] <= 0.0) continue;
            double s = 0.0;
            for (int mu = 0; mu < v.m(); ++mu) {
                const double e = v.value(node)[static_cast<std::size_t>(mu)] - limit.value(node)[static_cast<std::size_t>(mu)];
                s += e * e;
            }
            d = std::max(d, std::sqrt(s));
        }
        r.c_distances.push_back(d);
    }
    const double last = r.c_distances.back();
    if (last > options.convergence_tolerance * (1.0 + limit_scale)) {
        std::ostringstream os;
        os << "semicontinuity_check: sequence does not converge to the limit in C on supp eta (last distance "
           << last << ")";
        throw ConvergenceError(os.str(), last);
    }

    const std::vector<double> w = quadrature_weights(grid, CompactSubset::whole());
    const auto eval_f = [&](const Matrix& a) { return pair.f()(a); };
    const auto eval_g = [&](const Matrix& a) { return evaluate_nl(pair.g(), a); };
    const MatrixField limit_jac = jacobian_field(limit);
    r.limit_F = weighted_integral(eta, w, limit_jac, eval_f);
    r.limit_G = weighted_integral(eta, w, limit_jac, eval_g);
    for (const auto& v : sequence) {
        const MatrixField jac = jacobian_field(v);
        r.F_integrals.push_back(weighted_integral(eta, w, jac, eval_f));
        r.G_integrals.push_back(weighted_integral(eta, w, jac, eval_g));
        r.G_gaps.push_back(std::abs(r.G_integrals.back() - r.limit_G));
    }
    const auto count = r.F_integrals.size();
    r.tail_length = static_cast<int>(std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(count)))));
    const auto tail_begin = r.F_integrals.end() - r.tail_length;
    r.liminf_F = *std::min_element(tail_begin, r.F_integrals.end());
    r.limsup_F = *std::max_element(tail_begin, r.F_integrals.end());
    r.chain_holds = r.limit_F <= r.liminf_F + options.tolerance;
    r.G_gaps_decreasing = true;
    for (std::size_t i = 1; i < r.G_gaps.size(); ++i)
        if (r.G_gaps[i] > r.G_gaps[i - 1] && r.G_gaps[i] > options.tolerance) r.G_gaps_decreasing = false;
    r.G_converges = r.G_gaps_decreasing && r.G_gaps.back() <= options.tolerance;
    return r;
}

// ---------------------------------------------------------------- interior W^{1,k} bounds

Lemma1Report lemma1_bound_check(const InstancePair& pair, std::span<const GridMapping> family, double K_bound,
                                const CompactSubset& inner, const CompactSubset& outer) {
    if (family.empty()) throw PreconditionError("lemma1_bound_check: empty family");
    if (inner.margin < outer.margin) throw PreconditionError("lemma1_bound_check: inner subset must lie inside outer");
    const double k = pair.k();
    Lemma1Report r;
    for (const auto& v : family) {
        const MembershipReport m = classify_membership(pair, v, K_bound, CompactSubset::whole());
        Lemma1Entry e;
        e.member = m.in_class_G_K;
        e.ess_sup_K = m.ess_sup_K;
        const ScalarField mag = magnitude_field(v);
        e.lk_outer = lp_norm(mag, k, outer);
        const double lk_inner = lp_norm(mag, k, inner);
        const double grad_inner = lp_norm(operator_norm_field(jacobian_field(v)), k, inner);
        e.w1k_inner = std::pow(std::pow(lk_inner, k) + std::pow(grad_inner, k), 1.0 / k);
        if (e.member) {
            ++r.members;
            r.sup_lk_outer = std::max(r.sup_lk_outer, e.lk_outer);
            r.sup_w1k_inner = std::max(r.sup_w1k_inner, e.w1k_inner);
        }
        r.entries.push_back(e);
    }
    if (r.members == 0) throw PreconditionError("lemma1_bound_check: no mapping of the family lies in G(K)");
    r.ratio = r.sup_lk_outer > 0.0 ? r.sup_w1k_inner / r.sup_lk_outer : std::numeric_limits<double>::infinity();
    return r;
}

// ---------------------------------------------------------------- gradient convergence

Proposition1Report proposition1_convergence_check(const Integrand& f, const GrowthBounds& growth,
                                                  std::span<const GridMapping> sequence, const GridMapping& limit,
                                                  const CompactSubset& subset, double k,
                                                  const Proposition1Options& options) {
    check_sequence_shape(sequence, limit, "proposition1_convergence_check");
    if (!(k > 1.0)) throw PreconditionError("proposition1_convergence_check: exponent must exceed 1");
    if (!(growth.lower > 0.0) || !(growth.lower < growth.upper))
        throw PreconditionError("proposition1_convergence_check: need 0 < c < C");
    if (limit.grid().dim() != f.n() || limit.m() != f.m())
        throw DimensionError("proposition1_convergence_check: integrand shape differs");

    const Grid& grid = limit.grid();
    const std::vector<double> w = quadrature_weights(grid, CompactSubset::whole());
    auto energy = [&](const MatrixField& jac) {
        std::vector<double> terms(w.size());
        for (std::size_t node = 0; node < w.size(); ++node) {
            const Matrix a = jac.at(node);
            const double fa = f(a);
            const double p = std::pow(operator_norm(a), k);
            const double slack = 1e-12 * std::max(1.0, p);
            if (fa < growth.lower * p - slack || fa > growth.upper * (p + 1.0) + slack) {
                std::ostringstream os;
                os << "proposition1_convergence_check: growth bounds fail at a sampled Jacobian (F=" << fa
                   << ", |zeta|^p=" << p << ")";
                throw PreconditionError(os.str());
            }
            terms[node] = w[node] * fa;
        }
        return pairwise_sum(terms);
    };

    Proposition1Report r;
    const MatrixField limit_jac = jacobian_field(limit);
    r.limit_energy = energy(limit_jac);
    for (const auto& v : sequence) {
        r.l1_distances.push_back(vector_l1_distance(v, limit));
        r.energy_gaps.push_back(std::abs(energy(jacobian_field(v)) - r.limit_energy));
    }
    auto converged = [&](const std::vector<double>& seq, double ratio) {
        const double largest = *std::max_element(seq.begin(), seq.end());
        return seq.back() <= options.absolute_tolerance || seq.back() <= ratio * largest;
    };
    if (!converged(r.l1_distances, options.l1_ratio)) {
        throw ConvergenceError("proposition1_convergence_check: sequence does not converge in L^1", r.l1_distances.back());
    }
    if (!converged(r.energy_gaps, options.energy_ratio)) {
        std::ostringstream os;
        os << "proposition1_convergence_check: energy does not converge (last gap " << r.energy_gaps.back()
           << ", largest " << *std::max_element(r.energy_gaps.begin(), r.energy_gaps.end()) << ")";
        throw ConvergenceError(os.str(), r.energy_gaps.back());
    }
    for (const auto& v : sequence) r.gradient_distances.push_back(lk_gradient_distance(v, limit, k, subset));
    r.decreasing = true;
    for (std::size_t i = 1; i < r.gradient_distances.size(); ++i)
        if (!(r.gradient_distances[i] < r.gradient_distances[i - 1]) && r.gradient_distances[i] > options.absolute_tolerance)
            r.decreasing = false;
    r.final_distance = r.gradient_distances.back();
    return r;
}

// ---------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const SemicontinuityReport& r) {
    j = nlohmann::json{{"F_integrals", r.F_integrals},
                       {"G_integrals", r.G_integrals},
                       {"G_gaps", r.G_gaps},
                       {"c_distances", r.c_distances},
                       {"limit_F", r.limit_F},
                       {"limit_G", r.limit_G},
                       {"liminf_F", r.liminf_F},
                       {"limsup_F", r.limsup_F},
                       {"tail_length", r.tail_length},
                       {"chain_holds", r.chain_holds},
                       {"G_gaps_decreasing", r.G_gaps_decreasing},
                       {"G_converges", r.G_converges},
                       {"tolerance", r.tolerance}};
}

void to_json(nlohmann::json& j, const Lemma1Report& r) {
    auto entries = nlohmann::json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"member", e.member},
                           {"ess_sup_K", e.ess_sup_K},
                           {"lk_outer", e.lk_outer},
                           {"w1k_inner", e.w1k_inner}});
    j = nlohmann::json{{"entries", entries},
                       {"members", r.members},
                       {"sup_lk_outer", r.sup_lk_outer},
                       {"sup_w1k_inner", r.sup_w1k_inner},
                       {"ratio", r.ratio}};
}

void to_json(nlohmann::json& j, const Proposition1Report& r) {
    j = nlohmann::json{{"l1_distances", r.l1_distances},
                       {"energy_gaps", r.energy_gaps},
                       {"gradient_distances", r.gradient_distances},
                       {"limit_energy", r.limit_energy},
                       {"decreasing", r.decreasing},
                       {"final_distance", r.final_distance}};
}

}  // namespace qcstab
