#pragma once

#include "qcstab/families.hpp"
#include "qcstab/grid.hpp"
#include "qcstab/integrand.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcstab::cli {

using nlohmann::json;

/// Any problem with the experiment config: missing field, wrong type,
/// unreadable referenced file. Maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Read-only view of one JSON object in the config, with the dotted path used
/// in error messages.
class Section {
public:
    Section(const json& j, std::string path);

    bool has(const std::string& key) const;
    Section child(const std::string& key) const;
    const json& raw() const noexcept { return j_; }
    const std::string& path() const noexcept { return path_; }

    const json& at(const std::string& key) const;
    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key) const;
    int integer(const std::string& key, int fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::string field_name(const std::string& key) const;

private:
    const json& j_;
    std::string path_;
};

json load_config(const std::filesystem::path& path);

Grid parse_grid(const Section& s);
Matrix parse_matrix(const json& rows, const std::string& where);
std::vector<Complex> parse_complex_list(const json& list, const std::string& where);

/// Either `{"preset": "distortion", "n": N}` or `{"F": ..., "G": ...}`.
InstancePair parse_instance(const Section& s);
Integrand parse_integrand(const Section& s);

/// Mapping spec: `{"csv": path}`, `{"holomorphic": [[re, im], ...]}` or
/// `{"affine": {"matrix": rows, "offset": [...]}}`. Non-CSV specs need `grid`.
GridMapping parse_mapping(const Section& s, const std::optional<Grid>& grid, const std::filesystem::path& base_dir);

/// Sequence spec around a limit: kinds "bump" (limit + a/l bump e),
/// "oscillation" (limit + a/l sin(l x1) e), "constant" and "csv" (files).
std::vector<GridMapping> parse_sequence(const Section& s, const GridMapping& limit,
                                        const std::filesystem::path& base_dir);

/// The `seed` field, overridden by --seed. Throws ConfigError when neither is present.
std::uint64_t require_seed(const Section& s, const std::optional<std::uint64_t>& flag);

}  // namespace qcstab::cli
