#pragma once

#include "qcstab/linalg.hpp"
#include "qcstab/matrix.hpp"
#include "qcstab/null_lagrangian.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qcstab {

enum class IntegrandKind {
    operator_norm_power,  // scale * |zeta|^k + offset
    frobenius_power,      // scale * |zeta|_F^k + offset
    null_lagrangian,      // scale * G(zeta) + offset
    custom,               // user callable
};

std::string to_string(IntegrandKind kind);

/// Evaluatable F: R^{m x n} -> R with a declared homogeneity degree k.
///
/// The built-in kinds are nonnegative when scale >= 0 and offset >= 0. Signed
/// scales and offsets exist so that non-quasiconvex and non-homogeneous
/// integrands can be fed to the checkers.
class Integrand {
public:
    using Callable = std::function<double(const Matrix&)>;

    static Integrand operator_norm_power(int n, int m, double k, double scale = 1.0, double offset = 0.0);
    static Integrand frobenius_power(int n, int m, double k, double scale = 1.0, double offset = 0.0);
    static Integrand from_null_lagrangian(NullLagrangian g, double scale = 1.0, double offset = 0.0);
    static Integrand custom(int n, int m, double k, Callable f, std::string name = "custom");

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    double k() const noexcept { return k_; }
    IntegrandKind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    double offset() const noexcept { return offset_; }
    const std::string& name() const noexcept { return name_; }
    const NullLagrangian* lagrangian() const noexcept { return lagrangian_ ? &*lagrangian_ : nullptr; }

    double operator()(const Matrix& zeta) const;

    /// dF/dzeta. Analytic for the built-in kinds (a subgradient where the
    /// operator norm is not differentiable); central differences for custom.
    Matrix gradient(const Matrix& zeta) const;

    /// New integrand c * F (offset scaled too).
    Integrand scaled(double c) const;
    /// New integrand F + c.
    Integrand shifted(double c) const;

private:
    Integrand() = default;

    int n_ = 0;
    int m_ = 0;
    double k_ = 0.0;
    IntegrandKind kind_ = IntegrandKind::custom;
    double scale_ = 1.0;
    double offset_ = 0.0;
    std::string name_;
    std::optional<NullLagrangian> lagrangian_;
    Callable custom_;
};

void to_json(nlohmann::json& j, const Integrand& f);
/// `{"kind": ..., "n":..., "m":..., "k":..., "scale"?:..., "offset"?:...}`; the
/// null_lagrangian kind takes the Lagrangian under "lagrangian".
Integrand integrand_from_json(const nlohmann::json& j);

/// The (F, G) pair: F and G share (n, m, k) and G is homogeneous of degree k.
class InstancePair {
public:
    InstancePair(Integrand f, NullLagrangian g);

    /// F = |zeta|^n, G = det on n x n matrices.
    static InstancePair distortion_instance(int n);

    const Integrand& f() const noexcept { return f_; }
    const NullLagrangian& g() const noexcept { return g_; }
    int n() const noexcept { return g_.n(); }
    int m() const noexcept { return g_.m(); }
    int k() const noexcept { return g_.k(); }

private:
    Integrand f_;
    NullLagrangian g_;
};

void to_json(nlohmann::json& j, const InstancePair& p);
/// `{"F": <integrand>, "G": <null Lagrangian>}`.
InstancePair instance_from_json(const nlohmann::json& j);

struct HypothesisReport {
    double h3_max_relative_error = 0.0;
    double h4_constant_estimate = 0.0;
    double h5_cF_estimate = 0.0;
    int sample_count = 0;
    int refinement_iterations = 0;
};

void to_json(nlohmann::json& j, const HypothesisReport& r);

/// Worst relative deviation of F(t zeta) from t^k F(zeta) over seeded samples
/// with t in [0.5, 2]; every batch includes t = 2.
double check_homogeneity(const Integrand& f, int samples, std::uint64_t seed);

/// Estimate of sup{K >= 0 : F >= K G}, i.e. inf F/G over {|zeta| = 1, G > tol_G},
/// from low-discrepancy sphere samples refined by local descent.
/// Throws DegenerateInstanceError when no sample has G > tol_G.
double estimate_h4_constant(const InstancePair& pair, int budget, std::uint64_t seed);

/// Estimate of c_F = inf{F(zeta) : |zeta| = 1}.
double estimate_cF(const Integrand& f, int budget, std::uint64_t seed);

/// Runs all three checks with the same budget and seed.
HypothesisReport check_hypotheses(const InstancePair& pair, int budget, std::uint64_t seed);

/// Number of local descent steps per refined start in the H4 / c_F estimators.
inline constexpr int kSphereRefinementSteps = 300;

struct RankOneViolation {
    Matrix zeta;
    Vector a;
    Vector b;
    double t = 0.0;  // midpoint test at (-t, 0, t)
    double defect = 0.0;
};

struct RankOneReport {
    std::vector<RankOneViolation> violations;
    double min_defect = 0.0;
    double max_abs_defect = 0.0;
    int samples = 0;
};

/// Midpoint convexity of s -> F(zeta + s a (x) b) at s = -t, 0, t. Defect is
/// (F(zeta - t ab) + F(zeta + t ab)) / 2 - F(zeta); defects below
/// -1e-10 * (1 + |F(zeta)|) are reported.
RankOneReport rank_one_convexity_test(const Integrand& f, int samples, std::uint64_t seed);

}  // namespace qcstab
