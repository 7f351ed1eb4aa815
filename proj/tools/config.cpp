#include "config.hpp"

#include "qcstab/error.hpp"
#include "qcstab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qcstab::cli {

Section::Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
}

std::string Section::field_name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

bool Section::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const json& Section::at(const std::string& key) const {
    if (!has(key)) throw ConfigError("config: missing required field '" + field_name(key) + "'");
    return j_.at(key);
}

Section Section::child(const std::string& key) const { return Section(at(key), field_name(key)); }

double Section::number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError("config: field '" + field_name(key) + "' must be a number");
    return v.get<double>();
}

double Section::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

int Section::integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError("config: field '" + field_name(key) + "' must be an integer");
    return v.get<int>();
}

int Section::integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

std::string Section::string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError("config: field '" + field_name(key) + "' must be a string");
    return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

std::vector<double> Section::numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError("config: field '" + field_name(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("config: field '" + field_name(key) + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

Grid parse_grid(const Section& s) {
    const std::vector<double> lower = s.numbers("lower");
    const std::vector<double> upper = s.numbers("upper");
    std::vector<int> nodes;
    const json& nj = s.at("nodes");
    if (nj.is_number_integer()) {
        nodes.assign(lower.size(), nj.get<int>());
    } else if (nj.is_array()) {
        for (const auto& x : nj) {
            if (!x.is_number_integer()) throw ConfigError("config: field '" + s.field_name("nodes") + "' must hold integers");
            nodes.push_back(x.get<int>());
        }
    } else {
        throw ConfigError("config: field '" + s.field_name("nodes") + "' must be an integer or an array");
    }
    try {
        return Grid(Domain(lower, upper), nodes);
    } catch (const Error& e) {
        throw ConfigError("config: '" + s.path() + "': " + e.what());
    }
}

Matrix parse_matrix(const json& rows, const std::string& where) {
    if (!rows.is_array() || rows.empty() || !rows.front().is_array())
        throw ConfigError("config: field '" + where + "' must be a non-empty array of rows");
    const auto m = static_cast<int>(rows.size());
    const auto n = static_cast<int>(rows.front().size());
    if (m > kMaxDim || n > kMaxDim || n == 0) throw ConfigError("config: field '" + where + "' has unsupported shape");
    Matrix a(m, n);
    for (int i = 0; i < m; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigError("config: field '" + where + "' rows must have equal length");
        for (int j = 0; j < n; ++j) {
            if (!row[static_cast<std::size_t>(j)].is_number())
                throw ConfigError("config: field '" + where + "' must hold numbers");
            a(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return a;
}

std::vector<Complex> parse_complex_list(const json& list, const std::string& where) {
    if (!list.is_array() || list.empty()) throw ConfigError("config: field '" + where + "' must be a non-empty array");
    std::vector<Complex> out;
    for (const auto& c : list) {
        if (c.is_number()) {
            out.emplace_back(c.get<double>(), 0.0);
        } else if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number()) {
            out.emplace_back(c[0].get<double>(), c[1].get<double>());
        } else {
            throw ConfigError("config: field '" + where + "' entries must be numbers or [re, im] pairs");
        }
    }
    return out;
}

InstancePair parse_instance(const Section& s) {
    try {
        if (s.has("preset")) {
            const std::string preset = s.string("preset");
            if (preset != "distortion") throw ConfigError("config: field '" + s.field_name("preset") + "' must be \"distortion\"");
            return InstancePair::distortion_instance(s.integer("n"));
        }
        return instance_from_json(s.raw());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config: '" + s.path() + "': " + e.what());
    }
}

Integrand parse_integrand(const Section& s) {
    try {
        return integrand_from_json(s.raw());
    } catch (const std::exception& e) {
        throw ConfigError("config: '" + s.path() + "': " + e.what());
    }
}

GridMapping parse_mapping(const Section& s, const std::optional<Grid>& grid, const std::filesystem::path& base_dir) {
    try {
        if (s.has("csv")) return read_mapping_csv_file((base_dir / s.string("csv")).string());
        if (!grid) throw ConfigError("config: '" + s.path() + "' needs a 'grid' section to be sampled");
        if (s.has("holomorphic")) return holomorphic_polynomial(*grid, parse_complex_list(s.at("holomorphic"), s.field_name("holomorphic")));
        if (s.has("affine")) {
            const Section a = s.child("affine");
            const Matrix z = parse_matrix(a.at("matrix"), a.field_name("matrix"));
            if (z.cols() != grid->dim()) throw ConfigError("config: '" + a.field_name("matrix") + "' must have n columns");
            std::vector<double> b(static_cast<std::size_t>(z.rows()), 0.0);
            if (a.has("offset")) b = a.numbers("offset");
            if (b.size() != static_cast<std::size_t>(z.rows()))
                throw ConfigError("config: '" + a.field_name("offset") + "' must have m entries");
            return GridMapping::sample(*grid, static_cast<int>(z.rows()), [&](std::span<const double> x, std::span<double> out) {
                for (int i = 0; i < z.rows(); ++i) {
                    double acc = b[static_cast<std::size_t>(i)];
                    for (int j = 0; j < z.cols(); ++j) acc += z(i, j) * x[static_cast<std::size_t>(j)];
                    out[static_cast<std::size_t>(i)] = acc;
                }
            });
        }
        throw ConfigError("config: '" + s.path() + "' must contain one of 'csv', 'holomorphic', 'affine'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config: '" + s.path() + "': " + e.what());
    }
}

std::vector<GridMapping> parse_sequence(const Section& s, const GridMapping& limit, const std::filesystem::path& base_dir) {
    const std::string kind = s.string("kind");
    if (kind == "csv") {
        const json& files = s.at("files");
        if (!files.is_array() || files.empty()) throw ConfigError("config: field '" + s.field_name("files") + "' must be a non-empty array");
        std::vector<GridMapping> out;
        for (const auto& f : files) {
            if (!f.is_string()) throw ConfigError("config: field '" + s.field_name("files") + "' must hold paths");
            try {
                out.push_back(read_mapping_csv_file((base_dir / f.get<std::string>()).string()));
            } catch (const std::exception& e) {
                throw ConfigError("config: '" + s.field_name("files") + "': " + e.what());
            }
        }
        return out;
    }
    const std::vector<double> levels = s.numbers("levels");
    if (levels.empty()) throw ConfigError("config: field '" + s.field_name("levels") + "' must not be empty");
    for (double l : levels)
        if (!(l > 0.0)) throw ConfigError("config: field '" + s.field_name("levels") + "' must hold positive numbers");
    const double amplitude = s.number("amplitude", 1.0);
    std::vector<double> direction(static_cast<std::size_t>(limit.m()), 0.0);
    direction[0] = 1.0;
    if (s.has("direction")) direction = s.numbers("direction");
    if (direction.size() != static_cast<std::size_t>(limit.m()))
        throw ConfigError("config: field '" + s.field_name("direction") + "' must have m entries");

    const Grid& grid = limit.grid();
    std::vector<GridMapping> out;
    for (double l : levels) {
        if (kind == "constant") {
            out.push_back(limit);
            continue;
        }
        std::function<double(std::span<const double>)> profile;
        if (kind == "bump") {
            profile = [&](std::span<const double> x) { return box_bump(grid, x); };
        } else if (kind == "oscillation") {
            profile = [l](std::span<const double> x) { return std::sin(l * x[0]); };
        } else {
            throw ConfigError("config: field '" + s.field_name("kind") + "' must be one of bump, oscillation, constant, csv");
        }
        const GridMapping w = GridMapping::sample(grid, limit.m(), [&](std::span<const double> x, std::span<double> o) {
            const double p = profile(x);
            for (std::size_t mu = 0; mu < o.size(); ++mu) o[mu] = direction[mu] * p;
        });
        out.push_back(add_scaled(limit, w, amplitude / l));
    }
    return out;
}

std::uint64_t require_seed(const Section& s, const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (!s.has("seed")) throw ConfigError("config: missing required field 'seed' (or pass --seed)");
    const json& v = s.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("config: field 'seed' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

}  // namespace qcstab::cli
