#include "config.hpp"

#include "qcstab/distortion.hpp"
#include "qcstab/families.hpp"
#include "qcstab/io.hpp"
#include "qcstab/linalg.hpp"
#include "qcstab/null_lagrangian.hpp"
#include "qcstab/qc_search.hpp"
#include "qcstab/stability.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace qcstab;
using namespace qcstab::cli;

namespace {

enum Exit : int { ok = 0, config_error = 1, degenerate = 2, class_violation = 3, qc_violation = 4 };

struct Context {
    fs::path config_path;
    fs::path output_dir = ".";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    int threads = 1;

    fs::path base_dir() const { return config_path.parent_path(); }
    fs::path out(const std::string& name) const { return output_dir / name; }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void say(const Context& ctx, const std::string& line) {
    if (!ctx.quiet) std::cout << line << '\n';
}

std::optional<Grid> optional_grid(const Section& s) {
    if (!s.has("grid")) return std::nullopt;
    return parse_grid(s.child("grid"));
}

InstancePair instance_or_planar(const Section& s) {
    if (!s.has("instance")) return InstancePair::distortion_instance(2);
    return parse_instance(s.child("instance"));
}

json matrix_json(const Matrix& a) {
    json rows = json::array();
    for (int i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix zeta_or_default(const Section& s, int m, int n) {
    if (!s.has("zeta")) return Matrix::Zero(m, n);
    Matrix z = parse_matrix(s.at("zeta"), s.field_name("zeta"));
    if (z.rows() != m || z.cols() != n) throw ConfigError("config: field 'zeta' must be an m x n matrix");
    return z;
}

// Search options shared by qc-search and strict-qc-probe.
QcSearchOptions search_options(const Section& s, const Context& ctx) {
    QcSearchOptions o;
    o.resolution = s.integer("resolution", o.resolution);
    o.budget = s.integer("budget", o.budget);
    o.starts = s.integer("starts", o.starts);
    o.start_amplitude = s.number("start_amplitude", o.start_amplitude);
    o.slope_cap = s.number("slope_cap", o.slope_cap);
    o.seed = require_seed(s, ctx.seed);
    o.threads = ctx.threads;
    if (o.resolution < 9) throw ConfigError("config: field 'resolution' must be >= 9");
    if (o.budget < 0) throw ConfigError("config: field 'budget' must be nonnegative");
    if (o.starts < 1) throw ConfigError("config: field 'starts' must be >= 1");
    return o;
}

// ---------------------------------------------------------------- commands

int cmd_check_hypotheses(const Section& cfg, const Context& ctx) {
    const InstancePair pair = parse_instance(cfg.child("instance"));
    const int budget = cfg.integer("budget", 10000);
    if (budget < 1) throw ConfigError("config: field 'budget' must be >= 1");
    const std::uint64_t seed = require_seed(cfg, ctx.seed);

    const HypothesisReport report = check_hypotheses(pair, budget, seed);
    json j = report;
    j["budget"] = budget;
    j["seed"] = seed;
    if (cfg.raw().value("rank_one_samples", 0) > 0) {
        const RankOneReport r1 = rank_one_convexity_test(pair.f(), cfg.integer("rank_one_samples"), seed);
        j["rank_one"] = {{"samples", r1.samples},
                         {"violations", r1.violations.size()},
                         {"min_defect", r1.min_defect},
                         {"max_abs_defect", r1.max_abs_defect}};
    }
    write_json(ctx.out("hypotheses.json"), j);
    say(ctx, j.dump(2));
    return ok;
}

int cmd_distortion_map(const Section& cfg, const Context& ctx) {
    const InstancePair pair = instance_or_planar(cfg);
    const GridMapping v = parse_mapping(cfg.child("mapping"), optional_grid(cfg), ctx.base_dir());
    const CompactSubset subset{cfg.number("margin", 0.0)};
    const double K_bound = cfg.number("K_bound", 1.0);
    if (!(K_bound >= 1.0)) throw ConfigError("config: field 'K_bound' must be >= 1");
    if (v.grid().dim() != pair.n() || v.m() != pair.m())
        throw ConfigError("config: mapping shape does not match the instance");

    const DistortionField field = local_distortion_field(pair, v, subset);
    const MembershipReport membership = classify_membership(pair, v, K_bound, subset);
    std::ostringstream csv;
    const Grid& grid = v.grid();
    for (int a = 0; a < grid.dim(); ++a) csv << 'x' << a + 1 << ',';
    csv << "K,flag\n";
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        for (int a = 0; a < grid.dim(); ++a) csv << format_number(grid.coordinate(node, a)) << ',';
        csv << format_number(field.values[node]) << ',' << to_string(field.flags[node]) << '\n';
    }
    write_text(ctx.out("distortion.csv"), csv.str());
    json j = membership;
    j["invalid_nodes"] = field.invalid_count();
    write_json(ctx.out("membership.json"), j);
    std::ostringstream msg;
    msg << "ess_sup_K=" << format_number(membership.ess_sup_K) << " invalid_nodes=" << field.invalid_count();
    say(ctx, msg.str());
    return field.invalid_count() > 0 ? class_violation : ok;
}

int cmd_qc_search(const Section& cfg, const Context& ctx) {
    const Integrand f = parse_integrand(cfg.child("integrand"));
    const Matrix zeta = zeta_or_default(cfg, f.m(), f.n());
    const QcSearchOptions o = search_options(cfg, ctx);
    const double tol = cfg.number("tolerance", 1e-8);

    const QcSearchResult r = quasiconvexity_violation_search(f, zeta, o);
    const bool violation = r.best_excess < -tol;
    const json j{{"best_excess", r.best_excess},
                 {"best_start", r.best_start},
                 {"start_excess", r.start_excess},
                 {"violation", violation},
                 {"tolerance", tol},
                 {"zeta", matrix_json(zeta)},
                 {"resolution", o.resolution},
                 {"budget", o.budget},
                 {"starts", o.starts},
                 {"seed", o.seed}};
    write_json(ctx.out("qc_search.json"), j);
    write_mapping_csv_file(ctx.out("qc_argmin_phi.csv").string(), r.phi);
    say(ctx, "best_excess=" + format_number(r.best_excess) + (violation ? " (violation)" : ""));
    return violation ? qc_violation : ok;
}

int cmd_strict_qc_probe(const Section& cfg, const Context& ctx) {
    const Integrand f = parse_integrand(cfg.child("integrand"));
    const Matrix zeta = zeta_or_default(cfg, f.m(), f.n());
    const double eps = cfg.number("epsilon");
    const double c_bound = cfg.number("C");
    const QcSearchOptions o = search_options(cfg, ctx);

    const StrictProbeResult r = strict_qc_probe(f, zeta, eps, c_bound, o);
    const json j{{"delta_estimate", r.delta_estimate},
                 {"best_start", r.best_start},
                 {"feasible_starts", r.feasible_starts},
                 {"large_gradient_measure", r.large_gradient_measure},
                 {"gradient_lk_norm", r.gradient_lk_norm},
                 {"epsilon", eps},
                 {"C", c_bound},
                 {"zeta", matrix_json(zeta)},
                 {"resolution", o.resolution},
                 {"budget", o.budget},
                 {"starts", o.starts},
                 {"seed", o.seed}};
    write_json(ctx.out("strict_qc_probe.json"), j);
    say(ctx, "delta_estimate=" + format_number(r.delta_estimate));
    return ok;
}

int cmd_nl_verify(const Section& cfg, const Context& ctx) {
    NullLagrangian g = NullLagrangian::determinant(2);
    try {
        g = null_lagrangian_from_json(cfg.at("lagrangian"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: 'lagrangian': ") + e.what());
    }
    const Matrix zeta = zeta_or_default(cfg, g.m(), g.n());
    std::vector<int> resolutions{33, 65};
    if (cfg.has("resolutions")) {
        resolutions.clear();
        for (double r : cfg.numbers("resolutions")) resolutions.push_back(static_cast<int>(r));
    }
    for (int r : resolutions)
        if (r < 3) throw ConfigError("config: field 'resolutions' entries must be >= 3");
    const int count = cfg.integer("test_functions", 20);
    if (count < 1) throw ConfigError("config: field 'test_functions' must be >= 1");
    const std::uint64_t seed = require_seed(cfg, ctx.seed);

    json rows = json::array();
    double worst_finest = 0.0;
    for (int i = 0; i < count; ++i) {
        json residuals = json::array();
        double previous = 0.0;
        json ratios = json::array();
        for (std::size_t r = 0; r < resolutions.size(); ++r) {
            const Grid grid = Grid::uniform(Domain::unit_cube(g.n()), resolutions[r]);
            const GridMapping phi = random_bump_test_function(grid, g.m(), seed + static_cast<std::uint64_t>(i));
            const double res = integral_invariance_residual(g, zeta, phi);
            residuals.push_back(res);
            if (r > 0) ratios.push_back(res != 0.0 ? previous / res : 0.0);
            previous = res;
        }
        worst_finest = std::max(worst_finest, std::abs(previous));
        rows.push_back({{"index", i}, {"residuals", residuals}, {"ratios", ratios}});
    }
    const json j{{"lagrangian", g},
                 {"zeta", matrix_json(zeta)},
                 {"resolutions", resolutions},
                 {"seed", seed},
                 {"test_functions", rows},
                 {"max_abs_residual_finest", worst_finest}};
    write_json(ctx.out("nl_verify.json"), j);
    say(ctx, "max_abs_residual_finest=" + format_number(worst_finest));
    return ok;
}

std::vector<double> parse_t_values(const Section& cfg) {
    if (cfg.has("t_values")) return cfg.numbers("t_values");
    const Section s = cfg.child("t_schedule");
    const double t0 = s.number("t0");
    const int halvings = s.integer("halvings");
    if (!(t0 > 0.0) || halvings < 0) throw ConfigError("config: 't_schedule' needs t0 > 0 and halvings >= 0");
    std::vector<double> t{0.0};
    for (int i = halvings; i >= 0; --i) t.push_back(t0 * std::ldexp(1.0, -i));
    return t;
}

MappingFamily parse_family(const Section& s, const InstancePair& pair, const std::optional<Grid>& grid,
                           const fs::path& base_dir) {
    const std::string kind = s.string("kind");
    if (kind == "custom_sampled") {
        const json& samples = s.at("samples");
        if (!samples.is_array() || samples.empty())
            throw ConfigError("config: field '" + s.field_name("samples") + "' must be a non-empty array");
        std::vector<std::pair<double, GridMapping>> out;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Section item(samples[i], s.field_name("samples") + "[" + std::to_string(i) + "]");
            out.emplace_back(item.number("t"), parse_mapping(item.child("mapping"), grid, base_dir));
        }
        return MappingFamily::custom_sampled(pair, std::move(out));
    }
    if (!grid) throw ConfigError("config: missing required field 'grid'");
    std::vector<Complex> base{0.0, 1.0};
    if (s.has("base")) base = parse_complex_list(s.at("base"), s.field_name("base"));
    const double t_max = s.number("t_max", 1.0);
    try {
        if (kind == "planar_antiholomorphic_perturbation")
            return MappingFamily::antiholomorphic_perturbation(pair, *grid, base, t_max);
        if (kind == "planar_radial_stretch") return MappingFamily::radial_stretch(pair, *grid, base, t_max);
    } catch (const Error& e) {
        throw ConfigError("config: '" + s.path() + "': " + e.what());
    }
    throw ConfigError("config: field '" + s.field_name("kind") + "' names an unknown family");
}

int cmd_stability_curve(const Section& cfg, const Context& ctx) {
    const InstancePair pair = instance_or_planar(cfg);
    const MappingFamily family = parse_family(cfg.child("family"), pair, optional_grid(cfg), ctx.base_dir());
    const std::vector<double> t = parse_t_values(cfg);
    const CompactSubset subset{cfg.number("margin", 0.1)};
    const int degree = cfg.integer("degree", 3);

    json meta{{"family", to_string(family.kind())},
              {"projection_degree", degree},
              {"margin", subset.margin},
              {"epsilon_region", "whole domain"},
              {"distance_region", "grid nodes at distance >= margin from the boundary"},
              {"distances", "upper bounds: distance to the least-squares fit among holomorphic polynomials of degree "
                            "<= projection_degree, not the infimum over the whole solution class"}};
    std::ostringstream csv;
    int code = ok;
    try {
        const StabilityCurve curve = stability_curve(family, t, degree, subset, ctx.threads);
        write_stability_csv(csv, curve);
        meta["rows"] = curve.rows.size();
        meta["aborted_at"] = nullptr;
    } catch (const CurveAbortedError& e) {
        write_stability_csv(csv, e.partial());
        csv << "# aborted at t=" << format_number(e.t()) << '\n';
        meta["rows"] = e.partial().rows.size();
        meta["aborted_at"] = e.t();
        meta["abort_reason"] = e.what();
        code = class_violation;
        if (!ctx.quiet) std::cerr << e.what() << '\n';
    }
    write_text(ctx.out("stability_curve.csv"), csv.str());
    write_json(ctx.out("stability_curve_meta.json"), meta);
    say(ctx, "rows=" + meta["rows"].dump());
    return code;
}

int cmd_semicontinuity(const Section& cfg, const Context& ctx) {
    const InstancePair pair = instance_or_planar(cfg);
    const std::optional<Grid> grid = optional_grid(cfg);
    const GridMapping limit = parse_mapping(cfg.child("limit"), grid, ctx.base_dir());
    const std::vector<GridMapping> seq = parse_sequence(cfg.child("sequence"), limit, ctx.base_dir());
    SemicontinuityOptions opts;
    opts.tolerance = cfg.number("tolerance", opts.tolerance);
    opts.convergence_tolerance = cfg.number("convergence_tolerance", opts.convergence_tolerance);
    opts.tail_fraction = cfg.number("tail_fraction", opts.tail_fraction);
    const std::string eta_kind = cfg.string("eta", "bump");
    if (eta_kind != "bump") throw ConfigError("config: field 'eta' must be \"bump\"");
    const ScalarField eta = box_bump_field(limit.grid());

    const SemicontinuityReport r = semicontinuity_check(pair, seq, limit, eta, opts);
    write_json(ctx.out("semicontinuity.json"), json(r));
    say(ctx, std::string("chain_holds=") + (r.chain_holds ? "true" : "false") +
                 " G_converges=" + (r.G_converges ? "true" : "false"));
    return ok;
}

int cmd_lemma1(const Section& cfg, const Context& ctx) {
    const InstancePair pair = instance_or_planar(cfg);
    const std::optional<Grid> grid = optional_grid(cfg);
    const json& list = cfg.at("family");
    if (!list.is_array() || list.empty()) throw ConfigError("config: field 'family' must be a non-empty array");
    std::vector<GridMapping> family;
    for (std::size_t i = 0; i < list.size(); ++i)
        family.push_back(parse_mapping(Section(list[i], "family[" + std::to_string(i) + "]"), grid, ctx.base_dir()));
    const double K_bound = cfg.number("K_bound");
    const CompactSubset inner{cfg.number("inner_margin")};
    const CompactSubset outer{cfg.number("outer_margin", 0.0)};

    const Lemma1Report r = lemma1_bound_check(pair, family, K_bound, inner, outer);
    write_json(ctx.out("lemma1.json"), json(r));
    say(ctx, "ratio=" + format_number(r.ratio) + " members=" + std::to_string(r.members));
    return ok;
}

int cmd_prop1(const Section& cfg, const Context& ctx) {
    const Integrand f = parse_integrand(cfg.child("integrand"));
    const Section growth = cfg.child("growth");
    const GrowthBounds bounds{growth.number("c"), growth.number("C")};
    const std::optional<Grid> grid = optional_grid(cfg);
    const GridMapping limit = parse_mapping(cfg.child("limit"), grid, ctx.base_dir());
    const std::vector<GridMapping> seq = parse_sequence(cfg.child("sequence"), limit, ctx.base_dir());
    const CompactSubset subset{cfg.number("margin", 0.1)};
    const double k = cfg.number("k", f.k());
    Proposition1Options opts;
    opts.l1_ratio = cfg.number("l1_ratio", opts.l1_ratio);
    opts.energy_ratio = cfg.number("energy_ratio", opts.energy_ratio);

    const Proposition1Report r = proposition1_convergence_check(f, bounds, seq, limit, subset, k, opts);
    write_json(ctx.out("prop1.json"), json(r));
    say(ctx, "final_distance=" + format_number(r.final_distance));
    return ok;
}

using Command = int (*)(const Section&, const Context&);

int run(Command cmd, const Context& ctx) {
    json cfg;
    try {
        cfg = load_config(ctx.config_path);
        fs::create_directories(ctx.output_dir);
        return cmd(Section(cfg, ""), ctx);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return config_error;
    } catch (const FormatError& e) {
        std::cerr << e.what() << '\n';
        return config_error;
    } catch (const json::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return config_error;
    } catch (const DimensionError& e) {
        std::cerr << e.what() << '\n';
        return config_error;
    } catch (const Error& e) {
        // degenerate instance, infeasible probe, failed precondition, unsupported projection
        std::cerr << e.what() << '\n';
        return degenerate;
    } catch (const fs::filesystem_error& e) {
        std::cerr << e.what() << '\n';
        return config_error;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Null-Lagrangian, quasiconvexity and distortion-stability experiments"};
    app.require_subcommand(1);

    const std::map<std::string, std::pair<Command, std::string>> commands{
        {"check-hypotheses", {cmd_check_hypotheses, "homogeneity, H4 constant and c_F estimates"}},
        {"distortion-map", {cmd_distortion_map, "pointwise distortion K(x, v) of a sampled mapping"}},
        {"qc-search", {cmd_qc_search, "search for quasiconvexity violations"}},
        {"strict-qc-probe", {cmd_strict_qc_probe, "empirical strict quasiconvexity modulus"}},
        {"nl-verify", {cmd_nl_verify, "integral invariance of a null Lagrangian"}},
        {"stability-curve", {cmd_stability_curve, "(epsilon, distance) curve of a mapping family"}},
        {"semicontinuity", {cmd_semicontinuity, "lower semicontinuity chain on a sequence"}},
        {"lemma1", {cmd_lemma1, "W^{1,k} versus L^k bounds on a family in G(K)"}},
        {"prop1", {cmd_prop1, "gradient convergence from energy convergence"}},
    };

    Context ctx;
    std::string config;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, CLI::Option*> seed_options;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config, "experiment config JSON")->required();
        sub->add_option("--output-dir", output_dir, "directory for output files");
        seed_options[name] = sub->add_option("--seed", seed, "seed, overrides the config");
        sub->add_flag("--quiet", ctx.quiet, "no summary on stdout");
        sub->add_option("--threads", ctx.threads, "worker threads")->check(CLI::PositiveNumber);
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    ctx.config_path = config;
    ctx.output_dir = output_dir;
    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        if (seed_options[name]->count() > 0) ctx.seed = seed;
        return run(commands.at(name).first, ctx);
    }
    return config_error;
}
