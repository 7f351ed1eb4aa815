#include "qcstab/qc_search.hpp"

#include "qcstab/error.hpp"
#include "qcstab/parallel.hpp"
#include "qcstab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace qcstab {

CellwiseExcess::CellwiseExcess(const Integrand& f, Matrix zeta, int resolution)
    : f_(f), zeta_(std::move(zeta)), f_zeta_(0.0), grid_(Grid::uniform(Domain::unit_cube(f.n()), resolution)),
      n_(f.n()), m_(f.m()) {
    if (zeta_.rows() != m_ || zeta_.cols() != n_) throw DimensionError("CellwiseExcess: zeta shape differs from (m, n)");
    if (resolution < 9) throw PreconditionError("CellwiseExcess: resolution must be >= 9 nodes per axis");
    f_zeta_ = f_(zeta_);

    for (std::size_t node = 0; node < grid_.node_count(); ++node)
        if (!grid_.on_boundary(node)) interior_.push_back(node);

    const std::size_t corners = std::size_t{1} << n_;
    for (std::size_t node = 0; node < grid_.node_count(); ++node) {
        bool base = true;
        for (int a = 0; a < n_; ++a)
            if (grid_.axis_index(node, a) == resolution - 1) base = false;
        if (base) cell_base_.push_back(node);
    }
    corner_offset_.resize(corners);
    for (std::size_t c = 0; c < corners; ++c) {
        std::size_t off = 0;
        for (int a = 0; a < n_; ++a)
            if (c & (std::size_t{1} << a)) off += grid_.stride(a);
        corner_offset_[c] = off;
    }
    // Two-point Gauss nodes on [0, 1].
    const double g0 = 0.5 - 0.5 / std::numbers::sqrt3;
    const double g1 = 0.5 + 0.5 / std::numbers::sqrt3;
    shape_grad_.resize(corners * corners * static_cast<std::size_t>(n_));
    for (std::size_t g = 0; g < corners; ++g) {
        for (std::size_t c = 0; c < corners; ++c) {
            for (int nu = 0; nu < n_; ++nu) {
                double v = 1.0;
                for (int a = 0; a < n_; ++a) {
                    const double xi = (g & (std::size_t{1} << a)) ? g1 : g0;
                    const bool hi = c & (std::size_t{1} << a);
                    if (a == nu) {
                        v *= (hi ? 1.0 : -1.0) / grid_.spacing()[static_cast<std::size_t>(a)];
                    } else {
                        v *= hi ? xi : 1.0 - xi;
                    }
                }
                shape_grad_[(g * corners + c) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(nu)] = v;
            }
        }
    }
    double cell_volume = 1.0;
    for (double h : grid_.spacing()) cell_volume *= h;
    gauss_weight_ = cell_volume / static_cast<double>(corners);
}

void CellwiseExcess::scatter(std::span<const double> params, std::vector<double>& full) const {
    if (params.size() != static_cast<std::size_t>(parameter_count())) throw DimensionError("CellwiseExcess: parameter count mismatch");
    full.assign(grid_.node_count() * static_cast<std::size_t>(m_), 0.0);
    for (std::size_t p = 0; p < interior_.size(); ++p)
        for (int mu = 0; mu < m_; ++mu)
            full[interior_[p] * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mu)] =
                params[p * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mu)];
}

Matrix CellwiseExcess::cell_gradient(const std::vector<double>& full, std::size_t base, int gauss) const {
    const std::size_t corners = corner_offset_.size();
    Matrix a = Matrix::Zero(m_, n_);
    for (std::size_t c = 0; c < corners; ++c) {
        const double* val = full.data() + (base + corner_offset_[c]) * static_cast<std::size_t>(m_);
        const double* sg = shape_grad_.data() + (static_cast<std::size_t>(gauss) * corners + c) * static_cast<std::size_t>(n_);
        for (int mu = 0; mu < m_; ++mu)
            for (int nu = 0; nu < n_; ++nu) a(mu, nu) += val[mu] * sg[nu];
    }
    return a;
}

double CellwiseExcess::excess(std::span<const double> params) const {
    std::vector<double> full;
    scatter(params, full);
    const int corners = static_cast<int>(corner_offset_.size());
    std::vector<double> cell_terms(cell_base_.size());
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        double s = 0.0;
        for (int g = 0; g < corners; ++g) s += f_(zeta_ + cell_gradient(full, cell_base_[cell], g)) - f_zeta_;
        cell_terms[cell] = gauss_weight_ * s;
    }
    return pairwise_sum(cell_terms);
}

double CellwiseExcess::excess_and_gradient(std::span<const double> params, std::span<double> grad) const {
    std::vector<double> full;
    scatter(params, full);
    const std::size_t corners = corner_offset_.size();
    std::vector<double> cell_terms(cell_base_.size());
    std::vector<double> full_grad(full.size(), 0.0);
    for (std::size_t cell = 0; cell < cell_base_.size(); ++cell) {
        const std::size_t base = cell_base_[cell];
        double s = 0.0;
        for (std::size_t g = 0; g < corners; ++g) {
            const Matrix arg = zeta_ + cell_gradient(full, base, static_cast<int>(g));
            s += f_(arg) - f_zeta_;
            const Matrix df = f_.gradient(arg);
            for (std::size_t c = 0; c < corners; ++c) {
                const double* sg = shape_grad_.data() + (g * corners + c) * static_cast<std::size_t>(n_);
                double* out = full_grad.data() + (base + corner_offset_[c]) * static_cast<std::size_t>(m_);
                for (int mu = 0; mu < m_; ++mu) {
                    double acc = 0.0;
                    for (int nu = 0; nu < n_; ++nu) acc += df(mu, nu) * sg[nu];
                    out[mu] += gauss_weight_ * acc;
                }
            }
        }
        cell_terms[cell] = gauss_weight_ * s;
    }
    if (grad.size() != params.size()) throw DimensionError("CellwiseExcess: gradient buffer size mismatch");
    for (std::size_t p = 0; p < interior_.size(); ++p)
        for (int mu = 0; mu < m_; ++mu)
            grad[p * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mu)] =
                full_grad[interior_[p] * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mu)];
    return pairwise_sum(cell_terms);
}

void CellwiseExcess::gauss_gradient_norms(std::span<const double> params, std::vector<double>& norms,
                                          std::vector<double>& weights) const {
    std::vector<double> full;
    scatter(params, full);
    const int corners = static_cast<int>(corner_offset_.size());
    norms.clear();
    norms.reserve(cell_base_.size() * static_cast<std::size_t>(corners));
    for (std::size_t base : cell_base_)
        for (int g = 0; g < corners; ++g) norms.push_back(operator_norm(cell_gradient(full, base, g)));
    weights.assign(norms.size(), gauss_weight_);
}

GridMapping CellwiseExcess::to_mapping(std::span<const double> params) const {
    std::vector<double> full;
    scatter(params, full);
    return GridMapping(grid_, m_, std::move(full));
}

std::vector<double> CellwiseExcess::from_mapping(const GridMapping& phi) const {
    require_same_grid(phi.grid(), grid_);
    if (phi.m() != m_) throw DimensionError("CellwiseExcess: phi target dimension differs");
    std::vector<double> params(static_cast<std::size_t>(parameter_count()));
    for (std::size_t p = 0; p < interior_.size(); ++p)
        for (int mu = 0; mu < m_; ++mu)
            params[p * static_cast<std::size_t>(m_) + static_cast<std::size_t>(mu)] = phi.value(interior_[p])[static_cast<std::size_t>(mu)];
    return params;
}

// ---------------------------------------------------------------- descent

namespace {

double norm2(const std::vector<double>& v) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return std::sqrt(pairwise_sum(sq));
}

// Smooth random start: sum of low sine modes with seeded coefficients.
std::vector<double> smooth_start(const CellwiseExcess& problem, int m, std::uint64_t seed, int start, double amplitude) {
    const Grid& grid = problem.grid();
    const int n = grid.dim();
    constexpr int kModes = 3;
    int mode_count = 1;
    for (int a = 0; a < n; ++a) mode_count *= kModes;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(start) * 0xBF58476D1CE4E5B9ULL + 1);
    std::vector<double> coef(static_cast<std::size_t>(mode_count * m));
    for (double& c : coef) c = amplitude * (2.0 * unit_from_bits(rng()) - 1.0);
    const GridMapping phi = GridMapping::sample(grid, m, [&](std::span<const double> x, std::span<double> out) {
        for (int mu = 0; mu < m; ++mu) out[static_cast<std::size_t>(mu)] = 0.0;
        for (int mode = 0; mode < mode_count; ++mode) {
            double basis = 1.0;
            int rest = mode;
            for (int a = 0; a < n; ++a) {
                const int p = rest % kModes + 1;
                rest /= kModes;
                basis *= std::sin(p * std::numbers::pi * x[static_cast<std::size_t>(a)]);
            }
            for (int mu = 0; mu < m; ++mu)
                out[static_cast<std::size_t>(mu)] += coef[static_cast<std::size_t>(mode * m + mu)] * basis;
        }
    });
    return problem.from_mapping(phi);
}

struct DescentOutcome {
    std::vector<double> x;
    double value;
};

// Normalized gradient steps; double the step after success, halve after failure.
// `project` maps a trial point into the admissible set or rejects it.
template <class Project>
DescentOutcome descend(const CellwiseExcess& problem, std::vector<double> x, double value, int budget, double step,
                       Project&& project) {
    std::vector<double> grad(x.size());
    std::vector<double> trial(x.size());
    for (int it = 0; it < budget; ++it) {
        problem.excess_and_gradient(x, grad);
        const double gn = norm2(grad);
        if (!(gn > 0.0) || !std::isfinite(gn)) break;
        bool moved = false;
        while (step > 1e-14) {
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - (step / gn) * grad[i];
            std::optional<std::pair<std::vector<double>, double>> candidate = project(trial);
            if (candidate && candidate->second < value) {
                x = std::move(candidate->first);
                value = candidate->second;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return {std::move(x), value};
}

double initial_step(const CellwiseExcess& problem, const Matrix& zeta) {
    const double h = problem.grid().spacing()[0];
    return 0.01 * std::sqrt(static_cast<double>(problem.parameter_count())) * h * (1.0 + operator_norm(zeta));
}

// Largest |phi(a) - phi(b)| / h over lattice edges, an upper bound for the
// cellwise gradient entries.
double max_edge_slope(const CellwiseExcess& problem, const std::vector<double>& x) {
    const GridMapping phi = problem.to_mapping(x);
    const Grid& grid = phi.grid();
    double slope = 0.0;
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        for (int a = 0; a < grid.dim(); ++a) {
            if (grid.axis_index(node, a) + 1 >= grid.nodes_per_axis()[static_cast<std::size_t>(a)]) continue;
            const auto here = phi.value(node);
            const auto next = phi.value(node + grid.stride(a));
            for (std::size_t mu = 0; mu < here.size(); ++mu)
                slope = std::max(slope, std::abs(next[mu] - here[mu]) / grid.spacing()[static_cast<std::size_t>(a)]);
        }
    }
    return slope;
}

void check_options(const QcSearchOptions& o) {
    if (o.resolution < 9) throw PreconditionError("qc search: resolution must be >= 9 nodes per axis");
    if (o.budget < 0) throw PreconditionError("qc search: budget must be nonnegative");
    if (o.starts < 1) throw PreconditionError("qc search: need at least one start");
    if (!(o.slope_cap > 0.0)) throw PreconditionError("qc search: slope_cap must be positive");
}

}  // namespace

QcSearchResult quasiconvexity_violation_search(const Integrand& f, const Matrix& zeta, const QcSearchOptions& options) {
    check_options(options);
    const CellwiseExcess problem(f, zeta, options.resolution);
    const auto params = static_cast<std::size_t>(problem.parameter_count());
    if (options.budget == 0) {
        const std::vector<double> zero(params, 0.0);
        return QcSearchResult{0.0, 0, problem.to_mapping(zero), {0.0}};
    }
    const double step0 = initial_step(problem, zeta);
    const double slope_cap = options.slope_cap * (1.0 + operator_norm(zeta));
    std::vector<DescentOutcome> outcomes(static_cast<std::size_t>(options.starts));
    parallel_for(outcomes.size(), options.threads, [&](std::size_t s) {
        std::vector<double> x = s == 0 ? std::vector<double>(params, 0.0)
                                       : smooth_start(problem, f.m(), options.seed, static_cast<int>(s),
                                                      options.start_amplitude * (1.0 + operator_norm(zeta)));
        const double value = problem.excess(x);
        outcomes[s] = descend(problem, std::move(x), value, options.budget, step0,
                              [&](const std::vector<double>& t) -> std::optional<std::pair<std::vector<double>, double>> {
                                  if (max_edge_slope(problem, t) > slope_cap) return std::nullopt;
                                  const double v = problem.excess(t);
                                  if (!std::isfinite(v)) return std::nullopt;
                                  return std::make_pair(t, v);
                              });
    });
    // Start 0 descends from phi = 0, so its value is <= E(0) = 0.
    std::size_t best = 0;
    std::vector<double> per_start;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        per_start.push_back(outcomes[s].value);
        if (outcomes[s].value < outcomes[best].value) best = s;
    }
    QcSearchResult result{outcomes[best].value, static_cast<int>(best), problem.to_mapping(outcomes[best].x),
                          std::move(per_start)};
    return result;
}

// ---------------------------------------------------------------- strict probe

namespace {

struct ConstraintStats {
    double measure_large;
    double lk_norm;
};

ConstraintStats constraint_stats(const std::vector<double>& norms, const std::vector<double>& weights, double epsilon,
                                 double k) {
    std::vector<double> big(norms.size()), pk(norms.size());
    for (std::size_t i = 0; i < norms.size(); ++i) {
        big[i] = norms[i] >= epsilon ? weights[i] : 0.0;
        pk[i] = weights[i] * std::pow(norms[i], k);
    }
    return {pairwise_sum(big), std::pow(pairwise_sum(pk), 1.0 / k)};
}

}  // namespace

StrictProbeResult strict_qc_probe(const Integrand& f, const Matrix& zeta, double epsilon, double c_bound,
                                  const QcSearchOptions& options) {
    check_options(options);
    if (!(epsilon > 0.0) || !(c_bound > 0.0)) throw PreconditionError("strict_qc_probe: need eps > 0 and C > 0");
    const double k = f.k();
    const double volume = 1.0;  // unit cube
    if (std::pow(epsilon, k + 1.0) >= std::pow(c_bound, k)) {
        throw InfeasibleError("strict_qc_probe: eps^(k+1) >= C^k, so no phi satisfies both constraints");
    }
    const CellwiseExcess problem(f, zeta, options.resolution);
    const double lk_cap = c_bound * std::pow(volume, 1.0 / k);
    const double need = epsilon * volume;

    // Scales phi into the constraint set, choosing the best of a few
    // admissible scalings. nullopt when the shape admits none.
    auto repair = [&](const std::vector<double>& x) -> std::optional<std::pair<std::vector<double>, double>> {
        std::vector<double> norms, weights;
        problem.gauss_gradient_norms(x, norms, weights);
        std::vector<std::size_t> order(norms.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
        double cumulative = 0.0;
        double threshold = 0.0;
        for (std::size_t i : order) {
            cumulative += weights[i];
            if (cumulative > need) {
                threshold = norms[i];
                break;
            }
        }
        if (!(threshold > 0.0)) return std::nullopt;
        std::vector<double> pk(norms.size());
        for (std::size_t i = 0; i < norms.size(); ++i) pk[i] = weights[i] * std::pow(norms[i], k);
        const double lk = std::pow(pairwise_sum(pk), 1.0 / k);
        const double s_min = epsilon / threshold * (1.0 + 1e-12);
        const double s_max = lk_cap / lk;
        if (!(s_min <= s_max)) return std::nullopt;
        constexpr int kScales = 8;
        std::optional<std::pair<std::vector<double>, double>> best;
        for (int i = 0; i < kScales; ++i) {
            const double s = i == 0 ? s_min : s_min * std::pow(s_max / s_min, static_cast<double>(i) / (kScales - 1));
            std::vector<double> y(x.size());
            for (std::size_t p = 0; p < x.size(); ++p) y[p] = s * x[p];
            std::vector<double> ny, wy;
            problem.gauss_gradient_norms(y, ny, wy);
            const ConstraintStats st = constraint_stats(ny, wy, epsilon, k);
            if (!(st.measure_large > need) || st.lk_norm > lk_cap) continue;
            const double value = problem.excess(y);
            if (!std::isfinite(value)) continue;
            if (!best || value < best->second) best = std::make_pair(std::move(y), value);
        }
        return best;
    };

    const double step0 = initial_step(problem, zeta);
    std::vector<std::optional<DescentOutcome>> outcomes(static_cast<std::size_t>(options.starts));
    parallel_for(outcomes.size(), options.threads, [&](std::size_t s) {
        const std::vector<double> shape = smooth_start(problem, f.m(), options.seed, static_cast<int>(s) + 1,
                                                       options.start_amplitude * (1.0 + operator_norm(zeta)));
        auto start = repair(shape);
        if (!start) return;
        outcomes[s] = descend(problem, std::move(start->first), start->second, options.budget, step0, repair);
    });

    StrictProbeResult result{0.0, -1, 0, problem.to_mapping(std::vector<double>(static_cast<std::size_t>(problem.parameter_count()), 0.0)), 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        if (!outcomes[s]) continue;
        ++result.feasible_starts;
        if (outcomes[s]->value < best) {
            best = outcomes[s]->value;
            result.best_start = static_cast<int>(s);
        }
    }
    if (result.feasible_starts == 0)
        throw InfeasibleError("strict_qc_probe: no start reached the constraint set at this resolution");
    const auto& winner = *outcomes[static_cast<std::size_t>(result.best_start)];
    result.delta_estimate = best;
    result.phi = problem.to_mapping(winner.x);
    std::vector<double> norms, weights;
    problem.gauss_gradient_norms(winner.x, norms, weights);
    const ConstraintStats st = constraint_stats(norms, weights, epsilon, k);
    result.large_gradient_measure = st.measure_large;
    result.gradient_lk_norm = st.lk_norm;
    return result;
}

}  // namespace qcstab
