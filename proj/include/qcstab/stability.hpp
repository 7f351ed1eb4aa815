#pragma once

#include "qcstab/distortion.hpp"
#include "qcstab/error.hpp"
#include "qcstab/families.hpp"
#include "qcstab/grid.hpp"
#include "qcstab/integrand.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace qcstab {

// ---------------------------------------------------------------- projection

/// True when G = c det (c > 0) on 2x2 matrices and F is c |zeta|^2 or
/// (c/2) |zeta|_F^2. For these pairs F(zeta) = G(zeta) exactly on conformal
/// matrices, so the solution class is the holomorphic mappings.
bool has_planar_projector(const InstancePair& pair);

struct ProjectionResult {
    GridMapping u;
    double distance_C = 0.0;  // ||v - u||_{C(U)}
    double distance_W = 0.0;  // ||v - u||_{C(U)} + ||v' - u'||_{L^k(U)}
    std::vector<Complex> coefficients;

    /// (Re c_0, Im c_0, Re c_1, ...).
    std::vector<double> basis_coefficients() const;
};

/// Least-squares fit over the subset nodes of p(z) = sum_{j<=degree} c_j z^j.
/// The distances are upper bounds for the distance to the whole class.
ProjectionResult project_to_class(const InstancePair& pair, const GridMapping& v, int degree,
                                  const CompactSubset& subset);

/// Smallest (distance_C, distance_W) over user-supplied members of the class,
/// for instances without a registered projector.
ProjectionResult distance_to_candidates(const InstancePair& pair, const GridMapping& v,
                                        std::span<const GridMapping> candidates, const CompactSubset& subset);

// ---------------------------------------------------------------- curves

struct StabilityRow {
    double t = 0.0;
    double epsilon = 0.0;  // ||K(., v_t) - 1||_{L^1(V)}
    double dist_C = 0.0;
    double dist_W = 0.0;
    double ess_sup_K = 0.0;
};

struct StabilityCurve {
    std::vector<StabilityRow> rows;
    CompactSubset subset;
    int projection_degree = 0;
};

/// Thrown when some v_t leaves the class F. Carries the rows before it.
class CurveAbortedError : public PreconditionError {
public:
    CurveAbortedError(const std::string& what, double t, StabilityCurve partial)
        : PreconditionError(what), t_(t), partial_(std::move(partial)) {}

    double t() const noexcept { return t_; }
    const StabilityCurve& partial() const noexcept { return partial_; }

private:
    double t_;
    StabilityCurve partial_;
};

/// One row per t (input order). epsilon is taken over the whole domain, the
/// distances over `subset`. Rows are independent and may run on `threads`.
StabilityCurve stability_curve(const MappingFamily& family, std::span<const double> t_values, int degree,
                               const CompactSubset& subset, int threads = 1);

/// Header `t,epsilon_l1,dist_C,dist_W1k,ess_sup_K,fit_degree`.
void write_stability_csv(std::ostream& out, const StabilityCurve& curve);

// ---------------------------------------------------------------- semicontinuity

struct SemicontinuityOptions {
    double tolerance = 1e-6;          // slack in the chain and final G gap
    double convergence_tolerance = 0.05;  // relative C-distance for the precondition
    double tail_fraction = 0.25;      // share of the sequence used for liminf / limsup
};

struct SemicontinuityReport {
    std::vector<double> F_integrals;  // int eta F(v_l')
    std::vector<double> G_integrals;  // int eta G(v_l')
    std::vector<double> G_gaps;       // |int eta G(v_l') - int eta G(v')|
    std::vector<double> c_distances;  // on supp eta
    double limit_F = 0.0;
    double limit_G = 0.0;
    double liminf_F = 0.0;
    double limsup_F = 0.0;
    int tail_length = 0;
    bool chain_holds = false;         // limit_F <= liminf_F + tolerance
    bool G_gaps_decreasing = false;
    bool G_converges = false;         // decreasing and final gap <= tolerance
    double tolerance = 0.0;
};

SemicontinuityReport semicontinuity_check(const InstancePair& pair, std::span<const GridMapping> sequence,
                                          const GridMapping& limit, const ScalarField& eta,
                                          const SemicontinuityOptions& options = {});

// ---------------------------------------------------------------- interior W^{1,k} bounds

struct Lemma1Entry {
    bool member = false;
    double ess_sup_K = 0.0;
    double lk_outer = 0.0;   // ||v||_{L^k(outer)}
    double w1k_inner = 0.0;  // ||v||_{W^{1,k}(inner)}
};

struct Lemma1Report {
    std::vector<Lemma1Entry> entries;
    int members = 0;
    double sup_lk_outer = 0.0;
    double sup_w1k_inner = 0.0;
    double ratio = 0.0;  // sup W^{1,k}(inner) / sup L^k(outer) over members
};

/// inner must not be larger than outer (inner.margin >= outer.margin).
Lemma1Report lemma1_bound_check(const InstancePair& pair, std::span<const GridMapping> family, double K_bound,
                                const CompactSubset& inner, const CompactSubset& outer);

// ---------------------------------------------------------------- gradient convergence

struct GrowthBounds {
    double lower = 0.0;  // c in c|zeta|^p <= F
    double upper = 0.0;  // C in F <= C(|zeta|^p + 1)
};

struct Proposition1Options {
    double l1_ratio = 0.25;       // last L^1 distance must be <= this times the largest
    double energy_ratio = 0.25;   // same for the energy gaps
    double absolute_tolerance = 1e-10;
};

struct Proposition1Report {
    std::vector<double> l1_distances;        // ||v_l - v||_{L^1(V)}
    std::vector<double> energy_gaps;         // |int F(v_l') - int F(v')|
    std::vector<double> gradient_distances;  // ||v_l' - v'||_{L^k(subset)}
    double limit_energy = 0.0;
    bool decreasing = false;
    double final_distance = 0.0;
};

/// Checks the growth bounds on every sampled Jacobian, L^1 convergence and
/// energy convergence (ConvergenceError otherwise), then reports the
/// gradient distances.
Proposition1Report proposition1_convergence_check(const Integrand& f, const GrowthBounds& growth,
                                                  std::span<const GridMapping> sequence, const GridMapping& limit,
                                                  const CompactSubset& subset, double k,
                                                  const Proposition1Options& options = {});

void to_json(nlohmann::json& j, const SemicontinuityReport& r);
void to_json(nlohmann::json& j, const Lemma1Report& r);
void to_json(nlohmann::json& j, const Proposition1Report& r);

}  // namespace qcstab
