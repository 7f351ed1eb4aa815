// Runs the acceptance checks and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include "oracles.hpp"
#include "planar_fixtures.hpp"

#include "qcstab/distortion.hpp"
#include "qcstab/families.hpp"
#include "qcstab/integrand.hpp"
#include "qcstab/linalg.hpp"
#include "qcstab/null_lagrangian.hpp"
#include "qcstab/qc_search.hpp"
#include "qcstab/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace qcstab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix random_matrix(int m, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    return a;
}

Grid square(int nodes) { return Grid::uniform(Domain({-1.0, -1.0}, {1.0, 1.0}), nodes); }

// ---------------------------------------------------------------- 1

struct Derivatives {
    double first = 0.0;   // max operator norm of the finite-difference Jacobian
    double second = 0.0;  // max |second difference quotient| over axes, pairs and components
};

Derivatives lattice_derivatives(const GridMapping& phi) {
    Derivatives d;
    const ScalarField norms = operator_norm_field(jacobian_field(phi));
    for (double x : norms.values()) d.first = std::max(d.first, x);
    const Grid& g = phi.grid();
    const int n = g.dim();
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        if (g.on_boundary(node)) continue;
        for (int a = 0; a < n; ++a) {
            for (int b = a; b < n; ++b) {
                const double ha = g.spacing()[static_cast<std::size_t>(a)];
                const double hb = g.spacing()[static_cast<std::size_t>(b)];
                const std::size_t sa = g.stride(a), sb = g.stride(b);
                for (int mu = 0; mu < phi.m(); ++mu) {
                    auto v = [&](std::size_t k) { return phi.value(k)[static_cast<std::size_t>(mu)]; };
                    double q;
                    if (a == b) {
                        q = (v(node + sa) - 2.0 * v(node) + v(node - sa)) / (ha * ha);
                    } else {
                        q = (v(node + sa + sb) - v(node + sa - sb) - v(node - sa + sb) + v(node - sa - sb)) /
                            (4.0 * ha * hb);
                    }
                    d.second = std::max(d.second, std::abs(q));
                }
            }
        }
    }
    return d;
}

double coefficient_mass(const NullLagrangian& g) {
    double s = 0.0;
    for (const auto& t : g.terms()) s += std::abs(t.gamma);
    return s;
}

MultiIndex random_index(int bound, int k, std::mt19937_64& rng) {
    const auto all = enumerate_multi_indices(bound, k);
    return all[static_cast<std::size_t>(rng() % all.size())];
}

Verdict criterion_null_lagrangian() {
    Verdict v;
    std::mt19937_64 rng(20240601);
    struct Case {
        NullLagrangian g;
        Matrix zeta;
    };
    std::vector<Case> cases;
    cases.push_back({NullLagrangian::determinant(2), random_matrix(2, 2, rng)});
    cases.push_back({NullLagrangian::determinant(3), random_matrix(3, 3, rng)});
    std::uniform_real_distribution<double> gamma(0.5, 2.0);
    for (int c = 0; c < 10; ++c) {
        const int n = 2 + static_cast<int>(rng() % 2);
        const int m = 2 + static_cast<int>(rng() % 2);
        const int k = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min(n, m) - 1));
        const double sign = rng() % 2 ? 1.0 : -1.0;
        cases.push_back({NullLagrangian::single_minor(n, m, random_index(m, k, rng), random_index(n, k, rng),
                                                      sign * gamma(rng)),
                         random_matrix(m, n, rng)});
    }

    double worst_bound_use = 0.0, min_ratio = 1e300, max_ratio = 0.0;
    int checked = 0;
    for (const Case& c : cases) {
        const int n = c.g.n();
        const int fine = n == 2 ? 65 : 33;
        const int coarse = (fine + 1) / 2;
        const Grid gf = Grid::uniform(Domain::unit_cube(n), fine);
        const Grid gc = Grid::uniform(Domain::unit_cube(n), coarse);
        const double zeta_norm = operator_norm(c.zeta);
        for (int f = 0; f < 20; ++f) {
            const std::uint64_t seed = 1000 * static_cast<std::uint64_t>(checked) + static_cast<std::uint64_t>(f);
            const GridMapping pf = random_bump_test_function(gf, c.g.m(), seed);
            const GridMapping pc = random_bump_test_function(gc, c.g.m(), seed);
            const double rf = integral_invariance_residual(c.g, c.zeta, pf);
            const double rc = integral_invariance_residual(c.g, c.zeta, pc);
            const Derivatives d = lattice_derivatives(pf);
            const double h = 1.0 / (fine - 1);
            const double scale = coefficient_mass(c.g) * std::pow(zeta_norm + d.first, c.g.k() - 1) * d.second;
            const double ratio = std::abs(rc) / std::abs(rf);
            worst_bound_use = std::max(worst_bound_use, std::abs(rf) / (5.0 * h * h * scale));
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
        }
        ++checked;
    }
    v.require(worst_bound_use <= 1.0, "|residual| <= 5 h^2 scale");
    v.require(min_ratio >= 3.0 && max_ratio <= 5.0, "halving ratio in [3, 5]");
    v.detail << checked << " Lagrangians x 20 test functions, max |r|/(5h^2 scale)=" << worst_bound_use
             << ", halving ratio in [" << min_ratio << ", " << max_ratio << "]";
    return v;
}

// ---------------------------------------------------------------- 2

// Exhaustive grid over the operator-norm unit sphere of 2 x 2 matrices, written
// as R(a) diag(1, s) R(b) with both angles on [0, 2 pi) and s on [-1, 1]
// endpoints included; every unit-norm matrix has this form. F and det are
// evaluated with the oracle routines, not from the parametrization. Returns
// min F/G over det > 0 and min F.
std::pair<double, double> planar_sphere_grid_oracle(int per_axis) {
    double best_ratio = 1e300, best_f = 1e300;
    const double pi = std::numbers::pi;
    auto rotation = [](double t) { return oracle::Mat{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}}; };
    auto product = [](const oracle::Mat& x, const oracle::Mat& y) {
        oracle::Mat r(2, std::vector<double>(2, 0.0));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) r[i][j] += x[i][k] * y[k][j];
        return r;
    };
    for (int i = 0; i < per_axis; ++i) {
        const oracle::Mat left = rotation(2.0 * pi * i / per_axis);
        for (int l = 0; l < per_axis; ++l) {
            const double s = -1.0 + 2.0 * l / (per_axis - 1);
            const oracle::Mat scaled = product(left, {{1.0, 0.0}, {0.0, s}});
            for (int j = 0; j < per_axis; ++j) {
                const oracle::Mat z = product(scaled, rotation(2.0 * pi * j / per_axis));
                const double f = std::pow(oracle::spectral_norm(z), 2);
                const double g = oracle::leibniz_det(z);
                best_f = std::min(best_f, f);
                if (g > 1e-9) best_ratio = std::min(best_ratio, f / g);
            }
        }
    }
    return {best_ratio, best_f};
}

Verdict criterion_hypothesis_constants() {
    Verdict v;
    const auto [oracle_h4, oracle_cf] = planar_sphere_grid_oracle(100);  // 10^6 points
    const InstancePair planar = InstancePair::distortion_instance(2);
    const double h4 = estimate_h4_constant(planar, 100000, 7);
    const double cf = estimate_cF(planar.f(), 100000, 7);
    const InstancePair spatial = InstancePair::distortion_instance(3);
    const double h4_3 = estimate_h4_constant(spatial, 100000, 7);
    const double cf_3 = estimate_cF(spatial.f(), 100000, 7);
    v.require(std::abs(oracle_h4 - 1.0) <= 1e-3 && std::abs(oracle_cf - 1.0) <= 1e-3, "grid oracle near 1");
    v.require(std::abs(h4 - oracle_h4) <= 1e-3 && std::abs(cf - oracle_cf) <= 1e-3, "planar estimates vs oracle");
    v.require(std::abs(h4 - 1.0) <= 1e-3 && std::abs(cf - 1.0) <= 1e-3, "planar estimates within 1e-3");
    v.require(std::abs(h4_3 - 1.0) <= 1e-2 && std::abs(cf_3 - 1.0) <= 1e-2, "3D estimates within 1e-2");
    v.detail.precision(12);
    v.detail << "planar h4=" << h4 << " cF=" << cf << " (grid oracle " << oracle_h4 << ", " << oracle_cf
             << "); 3D h4=" << h4_3 << " cF=" << cf_3;
    return v;
}

// ---------------------------------------------------------------- 3

Verdict criterion_distortion_oracle() {
    Verdict v;
    const InstancePair p = InstancePair::distortion_instance(2);
    double worst = 0.0;
    std::size_t flag_mismatch = 0, invalid_nodes = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto c = fixture::random_piecewise_planar(seed, 33, seed % 5 == 4);
        const DistortionField f = local_distortion_field(p, c.mapping, CompactSubset::whole());
        for (int i = 0; i < 33; ++i) {
            for (int j = 0; j < 33; ++j) {
                const std::size_t node = static_cast<std::size_t>(i * 33 + j);
                const double expected = oracle::planar_distortion(oracle::planar_jacobian(c.samples, i, j));
                if (std::isnan(expected)) {
                    ++invalid_nodes;
                    if (f.flags[node] != NodeFlag::invalid_negative_G) ++flag_mismatch;
                    continue;
                }
                if (f.flags[node] != NodeFlag::valid) {
                    ++flag_mismatch;
                    continue;
                }
                worst = std::max(worst, std::abs(f.values[node] - expected) / std::abs(expected));
            }
        }
    }
    v.require(flag_mismatch == 0, "flags agree");
    v.require(worst <= 1e-10, "relative agreement 1e-10");
    v.detail << "50 mappings at 33^2, max relative difference " << worst << ", " << invalid_nodes
             << " invalid nodes, " << flag_mismatch << " flag mismatches";
    return v;
}

// ---------------------------------------------------------------- 4

Verdict criterion_qc_search() {
    Verdict v;
    QcSearchOptions o;
    o.resolution = 33;
    o.budget = 200;
    o.starts = 50;
    o.seed = 11;
    Matrix zeta(2, 2);
    zeta << 1.0, 0.3, -0.2, 0.8;
    const auto det = quasiconvexity_violation_search(Integrand::from_null_lagrangian(NullLagrangian::determinant(2)), zeta, o);
    const auto convex = quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2), zeta, o);
    QcSearchOptions neg = o;
    neg.starts = 4;
    const auto concave = quasiconvexity_violation_search(Integrand::frobenius_power(2, 2, 2, -1.0), zeta, neg);
    v.require(det.best_excess >= -1e-8, "det has no violation");
    v.require(convex.best_excess >= -1e-8, "|z|^2 has no violation");
    v.require(concave.best_excess <= -0.01, "-|z|^2 violation found");
    v.detail << "best excess: det " << det.best_excess << ", |z|^2 " << convex.best_excess << " (50 starts); -|z|^2 "
             << concave.best_excess << " (budget 200)";
    return v;
}

// ---------------------------------------------------------------- 5, 6

StabilityCurve reference_curve() {
    const InstancePair p = InstancePair::distortion_instance(2);
    const MappingFamily fam = MappingFamily::antiholomorphic_perturbation(p, square(65), {0.0, 1.0}, 0.1);
    std::vector<double> t{0.0};
    for (int i = 6; i >= 0; --i) t.push_back(0.1 * std::pow(0.5, i));
    return stability_curve(fam, t, 3, CompactSubset{0.1});
}

// Rows after the t = 0 row are in increasing t, so t_6 is rows[1] and t_0 is rows.back().
Verdict criterion_c_estimate(const StabilityCurve& c) {
    Verdict v;
    bool eps_mono = true, dc_mono = true;
    for (std::size_t i = 2; i < c.rows.size(); ++i) {
        eps_mono = eps_mono && c.rows[i].epsilon > c.rows[i - 1].epsilon;
        dc_mono = dc_mono && c.rows[i].dist_C > c.rows[i - 1].dist_C;
    }
    v.require(eps_mono, "epsilon strictly decreasing in i");
    v.require(dc_mono, "d_C strictly decreasing in i");
    v.require(c.rows[1].dist_C < c.rows.back().dist_C / 10, "d_C(t_6) < d_C(t_0)/10");
    v.require(c.rows[0].epsilon <= 1e-8 && c.rows[0].dist_C <= 1e-8, "t = 0 row vanishes");
    v.detail << "d_C(t_0)=" << c.rows.back().dist_C << " d_C(t_6)=" << c.rows[1].dist_C
             << " epsilon(t_0)=" << c.rows.back().epsilon << " t=0 row (" << c.rows[0].epsilon << ", "
             << c.rows[0].dist_C << ")";
    return v;
}

Verdict criterion_w_estimate(const StabilityCurve& c) {
    Verdict v;
    bool mono = true, above = true;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        above = above && c.rows[i].dist_W >= c.rows[i].dist_C;
        if (i >= 2) mono = mono && c.rows[i].dist_W > c.rows[i - 1].dist_W;
    }
    v.require(mono, "d_W strictly decreasing in i");
    v.require(above, "d_W >= d_C");
    v.require(c.rows[1].dist_W < c.rows.back().dist_W / 5, "d_W(t_6) < d_W(t_0)/5");
    v.detail << "d_W(t_0)=" << c.rows.back().dist_W << " d_W(t_6)=" << c.rows[1].dist_W;
    return v;
}

// ---------------------------------------------------------------- 7

GridMapping perturb(const GridMapping& base, double s, const std::vector<double>& direction,
                    const std::function<double(std::span<const double>)>& profile) {
    const GridMapping w = GridMapping::sample(base.grid(), base.m(), [&](std::span<const double> x, std::span<double> o) {
        const double p = profile(x);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = direction[i] * p;
    });
    return add_scaled(base, w, s);
}

Verdict criterion_proposition1() {
    Verdict v;
    const Grid g = square(65);
    const GridMapping limit = holomorphic_polynomial(g, std::vector<Complex>{0.0, 1.0});
    const Integrand f = Integrand::frobenius_power(2, 2, 2);
    const GrowthBounds growth{1.0, 2.0};
    std::vector<GridMapping> bump_seq, osc_seq;
    for (double l : {2.0, 4.0, 8.0, 16.0, 32.0}) {
        bump_seq.push_back(perturb(limit, 1.0 / l, {1.0, 0.0}, [&](std::span<const double> x) { return box_bump(g, x); }));
        osc_seq.push_back(perturb(limit, 1.0 / l, {1.0, 0.0}, [l](std::span<const double> x) { return std::sin(l * x[0]); }));
    }
    const Proposition1Report r = proposition1_convergence_check(f, growth, bump_seq, limit, CompactSubset{0.1}, 2.0);
    v.require(r.decreasing, "gradient distances decrease");
    v.require(r.final_distance <= r.gradient_distances.front() / 10, "final <= first/10");
    bool energy_error = false;
    std::string message;
    try {
        proposition1_convergence_check(f, growth, osc_seq, limit, CompactSubset{0.1}, 2.0);
    } catch (const ConvergenceError& e) {
        message = e.what();
        energy_error = message.find("energy") != std::string::npos;
    }
    v.require(energy_error, "oscillation raises the energy-convergence error");
    v.detail << "L2 gradient distances " << r.gradient_distances.front() << " -> " << r.final_distance
             << "; oscillation: " << (message.empty() ? std::string("no error") : message);
    return v;
}

// ---------------------------------------------------------------- 8

Verdict criterion_semicontinuity() {
    Verdict v;
    const InstancePair p = InstancePair::distortion_instance(2);
    const Grid g = square(65);
    const ScalarField eta = box_bump_field(g);
    const auto bump = [&](std::span<const double> x) { return box_bump(g, x); };
    struct Sequence {
        std::string name;
        GridMapping limit;
        std::vector<double> direction;
        std::function<double(std::span<const double>)> profile;
    };
    const GridMapping stretch = GridMapping::sample(g, 2, [](std::span<const double> x, std::span<double> o) {
        o[0] = 2.0 * x[0];
        o[1] = x[1];
    });
    const std::vector<Sequence> sequences{
        {"z+0.2z^2 + bump e1", holomorphic_polynomial(g, std::vector<Complex>{0.0, 1.0, 0.2}), {1.0, 0.0}, bump},
        {"z + bump x (1,1)", holomorphic_polynomial(g, std::vector<Complex>{0.0, 1.0}), {1.0, 1.0},
         [&](std::span<const double> x) { return x[0] * bump(x); }},
        {"z+0.1z^3 + sin sin bump e2", holomorphic_polynomial(g, std::vector<Complex>{0.0, 1.0, 0.0, 0.1}), {0.0, 1.0},
         [&](std::span<const double> x) { return std::sin(3.0 * x[0]) * std::sin(2.0 * x[1]) * bump(x); }},
        {"(2x, y) + bump y (1,-1)", stretch, {1.0, -1.0}, [&](std::span<const double> x) { return x[1] * bump(x); }},
        {"z + cos(4x) bump (1,2)", holomorphic_polynomial(g, std::vector<Complex>{0.0, 1.0}), {1.0, 2.0},
         [&](std::span<const double> x) { return std::cos(4.0 * x[0]) * bump(x); }},
    };
    int held = 0;
    double worst_chain = -1e300, worst_gap = 0.0;
    for (const Sequence& s : sequences) {
        std::vector<GridMapping> seq;
        for (int j = 1; j <= 8; ++j) seq.push_back(perturb(s.limit, std::pow(10.0, -j), s.direction, s.profile));
        const SemicontinuityReport r = semicontinuity_check(p, seq, s.limit, eta);
        worst_chain = std::max(worst_chain, r.limit_F - r.liminf_F);
        worst_gap = std::max(worst_gap, r.G_gaps.back());
        const bool ok = r.chain_holds && r.G_converges;
        held += ok;
        if (!ok) v.require(false, s.name);
    }
    v.detail << held << "/5 sequences; max (int eta F(v') - min tail) = " << worst_chain
             << ", max final G gap = " << worst_gap;
    return v;
}

// ---------------------------------------------------------------- 9

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QCSTAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict criterion_determinism() {
    Verdict v;
    const fs::path configs = fs::path(QCSTAB_SOURCE_DIR) / "configs";
    const std::vector<std::pair<std::string, std::string>> runs{
        {"check-hypotheses", "check_hypotheses_planar.json"},
        {"distortion-map", "distortion_stretch.json"},
        {"qc-search", "qc_search_det.json"},
        {"strict-qc-probe", "strict_probe_frobenius.json"},
        {"nl-verify", "nl_verify_det3.json"},
        {"stability-curve", "stability_planar.json"},
        {"semicontinuity", "semicontinuity_oscillation.json"},
        {"lemma1", "lemma1_conformal.json"},
        {"prop1", "prop1_bump.json"},
    };
    const fs::path root = fs::temp_directory_path() / "qcstab_determinism";
    fs::remove_all(root);
    int identical = 0;
    for (const auto& [cmd, cfg] : runs) {
        std::vector<fs::path> dirs;
        std::vector<int> codes;
        const int threads[] = {1, 1, 2};
        for (int r = 0; r < 3; ++r) {
            const fs::path out = root / cmd / std::to_string(r);
            dirs.push_back(out);
            codes.push_back(run_cli(cmd + " --quiet --seed 17 --threads " + std::to_string(threads[r]) + " --config " +
                                    (configs / cfg).string() + " --output-dir " + out.string()));
        }
        bool same = codes[0] == 0 && codes[1] == codes[0] && codes[2] == codes[0];
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            ++files;
            const std::string ref = slurp(entry.path());
            for (std::size_t r = 1; r < dirs.size(); ++r)
                same = same && fs::exists(dirs[r] / entry.path().filename()) &&
                       slurp(dirs[r] / entry.path().filename()) == ref;
        }
        same = same && files > 0;
        identical += same;
        if (!same) v.require(false, cmd);
    }
    fs::remove_all(root);
    v.detail << identical << "/" << runs.size() << " subcommands byte-identical over threads 1, 1, 2";
    return v;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        std::string name;
        std::function<Verdict()> run;
    };
    StabilityCurve curve;
    bool curve_ready = false;
    auto shared_curve = [&]() -> const StabilityCurve& {
        if (!curve_ready) {
            curve = reference_curve();
            curve_ready = true;
        }
        return curve;
    };
    const std::vector<Entry> entries{
        {1, "null-Lagrangian invariance", criterion_null_lagrangian},
        {2, "hypothesis constants", criterion_hypothesis_constants},
        {3, "distortion oracle equivalence", criterion_distortion_oracle},
        {4, "quasiconvexity search soundness", criterion_qc_search},
        {5, "C-distance stability curve", [&] { return criterion_c_estimate(shared_curve()); }},
        {6, "W-distance stability curve", [&] { return criterion_w_estimate(shared_curve()); }},
        {7, "gradient convergence from energy convergence", criterion_proposition1},
        {8, "semicontinuity chain", criterion_semicontinuity},
        {9, "CLI determinism", criterion_determinism},
    };
    int failures = 0;
    for (const Entry& e : entries) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = e.run();
        } catch (const std::exception& ex) {
            v.pass = false;
            v.detail << "exception: " << ex.what();
        }
        failures += !v.pass;
        std::printf("%s criterion %d (%s): %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", e.id, e.name.c_str(),
                    v.detail.str().c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
