#include "qcstab/integrand.hpp"

#include "qcstab/error.hpp"
#include "qcstab/sampling.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcstab {

std::string to_string(IntegrandKind kind) {
    switch (kind) {
        case IntegrandKind::operator_norm_power: return "operator_norm_power";
        case IntegrandKind::frobenius_power: return "frobenius_power";
        case IntegrandKind::null_lagrangian: return "null_lagrangian";
        case IntegrandKind::custom: return "custom";
    }
    return "custom";
}

namespace {

void check_dims(int n, int m, double k) {
    if (n < 1 || m < 1 || n > kMaxDim || m > kMaxDim) throw PreconditionError("Integrand: n, m out of range");
    if (!(k > 0.0) || !std::isfinite(k)) throw PreconditionError("Integrand: degree k must be positive");
}

}  // namespace

Integrand Integrand::operator_norm_power(int n, int m, double k, double scale, double offset) {
    check_dims(n, m, k);
    Integrand f;
    f.n_ = n;
    f.m_ = m;
    f.k_ = k;
    f.kind_ = IntegrandKind::operator_norm_power;
    f.scale_ = scale;
    f.offset_ = offset;
    f.name_ = "operator_norm_power";
    return f;
}

Integrand Integrand::frobenius_power(int n, int m, double k, double scale, double offset) {
    Integrand f = operator_norm_power(n, m, k, scale, offset);
    f.kind_ = IntegrandKind::frobenius_power;
    f.name_ = "frobenius_power";
    return f;
}

Integrand Integrand::from_null_lagrangian(NullLagrangian g, double scale, double offset) {
    Integrand f;
    f.n_ = g.n();
    f.m_ = g.m();
    f.k_ = g.k();
    f.kind_ = IntegrandKind::null_lagrangian;
    f.scale_ = scale;
    f.offset_ = offset;
    f.name_ = "null_lagrangian";
    f.lagrangian_ = std::move(g);
    return f;
}

Integrand Integrand::custom(int n, int m, double k, Callable fn, std::string name) {
    check_dims(n, m, k);
    if (!fn) throw PreconditionError("Integrand: empty callable");
    Integrand f;
    f.n_ = n;
    f.m_ = m;
    f.k_ = k;
    f.kind_ = IntegrandKind::custom;
    f.name_ = std::move(name);
    f.custom_ = std::move(fn);
    return f;
}

double Integrand::operator()(const Matrix& zeta) const {
    if (zeta.rows() != m_ || zeta.cols() != n_) throw DimensionError("Integrand: matrix shape differs from (m, n)");
    double base = 0.0;
    switch (kind_) {
        case IntegrandKind::operator_norm_power: {
            const double s = operator_norm(zeta);
            base = k_ == 2.0 ? s * s : std::pow(s, k_);
            break;
        }
        case IntegrandKind::frobenius_power: {
            const double s2 = zeta.squaredNorm();
            base = k_ == 2.0 ? s2 : std::pow(s2, 0.5 * k_);
            break;
        }
        case IntegrandKind::null_lagrangian:
            base = evaluate_nl(*lagrangian_, zeta);
            break;
        case IntegrandKind::custom:
            return custom_(zeta);
    }
    return scale_ * base + offset_;
}

Matrix Integrand::gradient(const Matrix& zeta) const {
    if (zeta.rows() != m_ || zeta.cols() != n_) throw DimensionError("Integrand: matrix shape differs from (m, n)");
    switch (kind_) {
        case IntegrandKind::operator_norm_power: {
            const SingularPair sp = top_singular_pair(zeta);
            if (sp.sigma == 0.0) return Matrix::Zero(m_, n_);
            const double coef = scale_ * k_ * std::pow(sp.sigma, k_ - 1.0);
            return coef * sp.left * sp.right.transpose();
        }
        case IntegrandKind::frobenius_power: {
            const double s = zeta.norm();
            if (s == 0.0) return Matrix::Zero(m_, n_);
            return scale_ * k_ * std::pow(s, k_ - 2.0) * zeta;
        }
        case IntegrandKind::null_lagrangian:
            return scale_ * evaluate_nl_gradient(*lagrangian_, zeta);
        case IntegrandKind::custom: {
            Matrix g(m_, n_);
            Matrix probe = zeta;
            for (int j = 0; j < n_; ++j) {
                for (int i = 0; i < m_; ++i) {
                    const double h = 1e-6 * std::max(1.0, std::abs(zeta(i, j)));
                    probe(i, j) = zeta(i, j) + h;
                    const double fp = custom_(probe);
                    probe(i, j) = zeta(i, j) - h;
                    const double fm = custom_(probe);
                    probe(i, j) = zeta(i, j);
                    g(i, j) = (fp - fm) / (2.0 * h);
                }
            }
            return g;
        }
    }
    return Matrix::Zero(m_, n_);
}

Integrand Integrand::scaled(double c) const {
    Integrand f = *this;
    if (kind_ == IntegrandKind::custom) {
        Callable inner = custom_;
        f.custom_ = [inner, c](const Matrix& z) { return c * inner(z); };
    } else {
        f.scale_ *= c;
        f.offset_ *= c;
    }
    return f;
}

Integrand Integrand::shifted(double c) const {
    Integrand f = *this;
    if (kind_ == IntegrandKind::custom) {
        Callable inner = custom_;
        f.custom_ = [inner, c](const Matrix& z) { return inner(z) + c; };
    } else {
        f.offset_ += c;
    }
    return f;
}

// ---------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const Integrand& f) {
    if (f.kind() == IntegrandKind::custom) throw FormatError("custom integrands have no JSON form");
    j = nlohmann::json::object();
    j["kind"] = to_string(f.kind());
    j["n"] = f.n();
    j["m"] = f.m();
    j["k"] = f.k();
    j["scale"] = f.scale();
    j["offset"] = f.offset();
    if (f.lagrangian()) j["lagrangian"] = *f.lagrangian();
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* name, const char* where) {
    if (!j.is_object() || !j.contains(name)) throw FormatError(std::string(where) + ": missing field '" + name + "'");
    return j.at(name);
}

double number_field(const nlohmann::json& j, const char* name, const char* where) {
    const auto& v = field(j, name, where);
    if (!v.is_number()) throw FormatError(std::string(where) + ": field '" + name + "' must be a number");
    return v.get<double>();
}

int integer_field(const nlohmann::json& j, const char* name, const char* where) {
    const auto& v = field(j, name, where);
    if (!v.is_number_integer()) throw FormatError(std::string(where) + ": field '" + name + "' must be an integer");
    return v.get<int>();
}

}  // namespace

Integrand integrand_from_json(const nlohmann::json& j) {
    const char* where = "integrand";
    const auto& kind_json = field(j, "kind", where);
    if (!kind_json.is_string()) throw FormatError("integrand: field 'kind' must be a string");
    const std::string kind = kind_json.get<std::string>();
    const double scale = j.contains("scale") ? number_field(j, "scale", where) : 1.0;
    const double offset = j.contains("offset") ? number_field(j, "offset", where) : 0.0;
    if (kind == "null_lagrangian") {
        return Integrand::from_null_lagrangian(null_lagrangian_from_json(field(j, "lagrangian", where)), scale, offset);
    }
    const int n = integer_field(j, "n", where);
    const int m = integer_field(j, "m", where);
    const double k = number_field(j, "k", where);
    if (kind == "operator_norm_power") return Integrand::operator_norm_power(n, m, k, scale, offset);
    if (kind == "frobenius_power") return Integrand::frobenius_power(n, m, k, scale, offset);
    throw FormatError("integrand: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------- pair

InstancePair::InstancePair(Integrand f, NullLagrangian g) : f_(std::move(f)), g_(std::move(g)) {
    if (f_.n() != g_.n() || f_.m() != g_.m() || f_.k() != static_cast<double>(g_.k()))
        throw DimensionError("InstancePair: F and G disagree on (n, m, k)");
    if (!is_homogeneous_degree_k(g_)) throw PreconditionError("InstancePair: G must be homogeneous (gamma0 = 0)");
    const bool any = std::any_of(g_.terms().begin(), g_.terms().end(), [](const auto& t) { return t.gamma != 0.0; });
    if (!any) throw PreconditionError("InstancePair: G has no nonzero minor coefficient");
}

InstancePair InstancePair::distortion_instance(int n) {
    return InstancePair(Integrand::operator_norm_power(n, n, n), NullLagrangian::determinant(n));
}

void to_json(nlohmann::json& j, const InstancePair& p) {
    j = nlohmann::json::object();
    j["F"] = p.f();
    j["G"] = p.g();
}

InstancePair instance_from_json(const nlohmann::json& j) {
    const char* where = "instance";
    return InstancePair(integrand_from_json(field(j, "F", where)), null_lagrangian_from_json(field(j, "G", where)));
}

void to_json(nlohmann::json& j, const HypothesisReport& r) {
    j = nlohmann::json{{"h3_max_relative_error", r.h3_max_relative_error},
                       {"h4_constant_estimate", r.h4_constant_estimate},
                       {"h5_cF_estimate", r.h5_cF_estimate},
                       {"sample_count", r.sample_count},
                       {"refinement_iterations", r.refinement_iterations}};
}

// ---------------------------------------------------------------- sampling helpers

namespace {

constexpr int kRefinedStarts = 8;

Matrix matrix_from_unit(const std::vector<double>& u, std::size_t offset, int m, int n) {
    Matrix z(m, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) z(i, j) = 2.0 * u[offset + static_cast<std::size_t>(j * m + i)] - 1.0;
    return z;
}

Vector vector_from_unit(const std::vector<double>& u, std::size_t offset, int len) {
    Vector v(len);
    for (int i = 0; i < len; ++i) v(i) = 2.0 * u[offset + static_cast<std::size_t>(i)] - 1.0;
    return v;
}

// Objective on the sphere {|zeta| = 1}; nullopt outside its admissible set.
using SphereObjective = std::function<std::optional<double>(const Matrix&)>;

std::optional<Matrix> normalized(const Matrix& z) {
    const double s = operator_norm(z);
    if (!(s > 1e-300) || !std::isfinite(s)) return std::nullopt;
    return Matrix(z / s);
}

// Monotone descent with normalized central-difference gradients and a
// fixed step schedule (grow 1.5x on success, halve on failure).
double refine_on_sphere(const SphereObjective& objective, Matrix x, double fx, int steps) {
    const int m = static_cast<int>(x.rows());
    const int n = static_cast<int>(x.cols());
    double step = 0.05;
    constexpr double h = 1e-7;
    for (int it = 0; it < steps; ++it) {
        Matrix g(m, n);
        Matrix probe = x;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) {
                probe(i, j) = x(i, j) + h;
                const auto fp = objective(*normalized(probe));
                probe(i, j) = x(i, j) - h;
                const auto fm = objective(*normalized(probe));
                probe(i, j) = x(i, j);
                if (fp && fm) {
                    g(i, j) = (*fp - *fm) / (2.0 * h);
                } else if (fp) {
                    g(i, j) = (*fp - fx) / h;
                } else if (fm) {
                    g(i, j) = (fx - *fm) / h;
                } else {
                    g(i, j) = 0.0;
                }
            }
        }
        const double gn = g.norm();
        if (!(gn > 0.0) || !std::isfinite(gn)) break;
        bool moved = false;
        while (step > 1e-13) {
            const auto trial = normalized(x - (step / gn) * g);
            if (trial) {
                const auto ft = objective(*trial);
                if (ft && *ft < fx) {
                    x = *trial;
                    fx = *ft;
                    step = std::min(step * 1.5, 0.5);
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return fx;
}

struct SphereSamples {
    std::vector<Matrix> points;
};

// budget points on the operator-norm unit sphere from a shifted Halton cube.
SphereSamples sample_sphere(int m, int n, int budget, std::uint64_t seed) {
    HaltonSequence seq(m * n, seed);
    SphereSamples out;
    out.points.reserve(static_cast<std::size_t>(budget));
    for (int i = 0; i < budget; ++i) {
        const auto u = seq.next();
        if (auto z = normalized(matrix_from_unit(u, 0, m, n))) out.points.push_back(*z);
    }
    return out;
}

// Minimizes objective over the sampled points, then refines the best few.
double sphere_infimum(const SphereObjective& objective, const SphereSamples& samples) {
    struct Candidate {
        double value;
        std::size_t index;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < samples.points.size(); ++i) {
        if (auto v = objective(samples.points[i])) cands.push_back({*v, i});
    }
    if (cands.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t keep = std::min<std::size_t>(kRefinedStarts, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                          return a.value < b.value || (a.value == b.value && a.index < b.index);
                      });
    double best = cands.front().value;
    for (std::size_t c = 0; c < keep; ++c) {
        const double refined =
            refine_on_sphere(objective, samples.points[cands[c].index], cands[c].value, kSphereRefinementSteps);
        best = std::min(best, refined);
    }
    return best;
}

}  // namespace

double check_homogeneity(const Integrand& f, int samples, std::uint64_t seed) {
    if (samples < 1) throw PreconditionError("check_homogeneity: samples must be >= 1");
    const int m = f.m();
    const int n = f.n();
    HaltonSequence seq(m * n + 1, seed);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const auto u = seq.next();
        const Matrix z = matrix_from_unit(u, 0, m, n);
        const double t = s == 0 ? 2.0 : 0.5 * std::pow(4.0, u[static_cast<std::size_t>(m * n)]);
        const double lhs = f(t * z);
        const double rhs = std::pow(t, f.k()) * f(z);
        const double denom = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
        const double err = lhs == rhs ? 0.0 : std::abs(lhs - rhs) / denom;
        worst = std::max(worst, err);
    }
    return worst;
}

double estimate_h4_constant(const InstancePair& pair, int budget, std::uint64_t seed) {
    if (budget < 1) throw PreconditionError("estimate_h4_constant: budget must be >= 1");
    const SphereSamples samples = sample_sphere(pair.m(), pair.n(), budget, seed);
    double g_scale = 0.0;
    for (const Matrix& z : samples.points) g_scale = std::max(g_scale, std::abs(evaluate_nl(pair.g(), z)));
    const double tol_g = 1e-9 * g_scale;
    const Integrand& f = pair.f();
    const NullLagrangian& g = pair.g();
    const SphereObjective ratio = [&](const Matrix& z) -> std::optional<double> {
        const double gz = evaluate_nl(g, z);
        if (!(gz > tol_g)) return std::nullopt;
        return f(z) / gz;
    };
    const double best = sphere_infimum(ratio, samples);
    if (std::isnan(best) || g_scale == 0.0)
        throw DegenerateInstanceError("estimate_h4_constant: no sampled matrix with G > tol_G");
    return best;
}

double estimate_cF(const Integrand& f, int budget, std::uint64_t seed) {
    if (budget < 1) throw PreconditionError("estimate_cF: budget must be >= 1");
    const SphereSamples samples = sample_sphere(f.m(), f.n(), budget, seed);
    const SphereObjective value = [&](const Matrix& z) -> std::optional<double> { return f(z); };
    const double best = sphere_infimum(value, samples);
    if (std::isnan(best)) throw DegenerateInstanceError("estimate_cF: no usable sphere sample");
    return best;
}

HypothesisReport check_hypotheses(const InstancePair& pair, int budget, std::uint64_t seed) {
    HypothesisReport r;
    r.h3_max_relative_error = check_homogeneity(pair.f(), budget, seed);
    r.h4_constant_estimate = estimate_h4_constant(pair, budget, seed);
    r.h5_cF_estimate = estimate_cF(pair.f(), budget, seed);
    r.sample_count = budget;
    r.refinement_iterations = kSphereRefinementSteps;
    return r;
}

RankOneReport rank_one_convexity_test(const Integrand& f, int samples, std::uint64_t seed) {
    if (samples < 1) throw PreconditionError("rank_one_convexity_test: samples must be >= 1");
    const int m = f.m();
    const int n = f.n();
    HaltonSequence seq(m * n + m + n + 1, seed);
    RankOneReport report;
    report.samples = samples;
    report.min_defect = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        const auto u = seq.next();
        const Matrix z = matrix_from_unit(u, 0, m, n);
        const Vector a = vector_from_unit(u, static_cast<std::size_t>(m * n), m);
        const Vector b = vector_from_unit(u, static_cast<std::size_t>(m * n + m), n);
        const double t = std::max(u[static_cast<std::size_t>(m * n + m + n)], 1e-3);
        const Matrix dir = t * a * b.transpose();
        const double f0 = f(z);
        const double defect = 0.5 * (f(z - dir) + f(z + dir)) - f0;
        report.min_defect = std::min(report.min_defect, defect);
        report.max_abs_defect = std::max(report.max_abs_defect, std::abs(defect));
        if (defect < -1e-10 * (1.0 + std::abs(f0))) report.violations.push_back({z, a, b, t, defect});
    }
    return report;
}

}  // namespace qcstab
