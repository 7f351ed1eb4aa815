#include "qcstab/families.hpp"

#include "qcstab/error.hpp"
#include "qcstab/sampling.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace qcstab {

namespace {

void require_planar(const Grid& grid) {
    if (grid.dim() != 2) throw DimensionError("planar family needs a two-dimensional grid");
}

Complex horner(std::span<const Complex> c, Complex z) {
    Complex acc = 0.0;
    for (std::size_t j = c.size(); j-- > 0;) acc = acc * z + c[j];
    return acc;
}

}  // namespace

GridMapping holomorphic_polynomial(const Grid& grid, std::span<const Complex> coefficients) {
    require_planar(grid);
    return GridMapping::sample(grid, 2, [&](std::span<const double> x, std::span<double> out) {
        const Complex w = horner(coefficients, Complex(x[0], x[1]));
        out[0] = w.real();
        out[1] = w.imag();
    });
}

double box_bump(const Grid& grid, std::span<const double> x) {
    const Domain& d = grid.domain();
    double b = 1.0;
    for (int a = 0; a < grid.dim(); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double s = (2.0 * x[ua] - (d.lower()[ua] + d.upper()[ua])) / (d.upper()[ua] - d.lower()[ua]);
        const double q = 1.0 - s * s;
        b *= q * q;
    }
    return b;
}

ScalarField box_bump_field(const Grid& grid) {
    ScalarField f(grid);
    for (std::size_t node = 0; node < grid.node_count(); ++node) f[node] = box_bump(grid, grid.point(node));
    return f;
}

GridMapping random_bump_test_function(const Grid& grid, int m, std::uint64_t seed) {
    if (m < 1) throw DimensionError("random_bump_test_function: m must be positive");
    const int n = grid.dim();
    const auto per = static_cast<std::size_t>(1 + 2 * n);
    std::mt19937_64 rng(seed);
    std::vector<double> c(per * static_cast<std::size_t>(m));
    for (double& x : c) x = 2.0 * unit_from_bits(rng()) - 1.0;
    const Domain& d = grid.domain();
    return GridMapping::sample(grid, m, [&](std::span<const double> x, std::span<double> out) {
        std::vector<double> r(static_cast<std::size_t>(n));
        double bump = 1.0;
        for (std::size_t a = 0; a < r.size(); ++a) {
            r[a] = (x[a] - d.lower()[a]) / (d.upper()[a] - d.lower()[a]);
            bump *= r[a] * (1.0 - r[a]);
        }
        for (std::size_t mu = 0; mu < static_cast<std::size_t>(m); ++mu) {
            const double* cc = &c[mu * per];
            double poly = cc[0];
            for (std::size_t a = 0; a < r.size(); ++a)
                poly += cc[1 + a] * r[a] + cc[1 + r.size() + a] * r[a] * r[(a + 1) % r.size()];
            out[mu] = bump * poly;
        }
    });
}

std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::planar_antiholomorphic_perturbation: return "planar_antiholomorphic_perturbation";
        case FamilyKind::planar_radial_stretch: return "planar_radial_stretch";
        case FamilyKind::custom_sampled: return "custom_sampled";
    }
    return "custom_sampled";
}

FamilyKind family_kind_from_string(const std::string& s) {
    if (s == "planar_antiholomorphic_perturbation") return FamilyKind::planar_antiholomorphic_perturbation;
    if (s == "planar_radial_stretch") return FamilyKind::planar_radial_stretch;
    if (s == "custom_sampled" || s == "custom-sampled") return FamilyKind::custom_sampled;
    throw FormatError("unknown family kind '" + s + "'");
}

MappingFamily::MappingFamily(FamilyKind kind, InstancePair instance, Grid grid, std::vector<Complex> base, double t_max)
    : kind_(kind), instance_(std::move(instance)), grid_(std::move(grid)), base_(std::move(base)), t_max_(t_max) {
    if (!(t_max_ >= 0.0)) throw PreconditionError("MappingFamily: t_max must be nonnegative");
}

MappingFamily MappingFamily::antiholomorphic_perturbation(InstancePair instance, Grid grid, std::vector<Complex> base,
                                                          double t_max) {
    require_planar(grid);
    if (instance.n() != 2 || instance.m() != 2) throw DimensionError("planar family needs a planar instance");
    return MappingFamily(FamilyKind::planar_antiholomorphic_perturbation, std::move(instance), std::move(grid),
                         std::move(base), t_max);
}

MappingFamily MappingFamily::radial_stretch(InstancePair instance, Grid grid, std::vector<Complex> base, double t_max) {
    require_planar(grid);
    if (instance.n() != 2 || instance.m() != 2) throw DimensionError("planar family needs a planar instance");
    return MappingFamily(FamilyKind::planar_radial_stretch, std::move(instance), std::move(grid), std::move(base), t_max);
}

MappingFamily MappingFamily::custom_sampled(InstancePair instance, std::vector<std::pair<double, GridMapping>> samples) {
    if (samples.empty()) throw PreconditionError("custom family needs at least one sample");
    double t_max = 0.0;
    for (const auto& [t, v] : samples) {
        require_same_grid(v.grid(), samples.front().second.grid());
        t_max = std::max(t_max, t);
    }
    MappingFamily f(FamilyKind::custom_sampled, std::move(instance), samples.front().second.grid(), {}, t_max);
    f.samples_ = std::move(samples);
    return f;
}

GridMapping MappingFamily::at(double t) const {
    if (kind_ == FamilyKind::custom_sampled) {
        for (const auto& [ts, v] : samples_)
            if (ts == t) return v;
        std::ostringstream os;
        os << "custom family has no sample at t=" << t;
        throw PreconditionError(os.str());
    }
    if (t < 0.0 || t > t_max_) {
        std::ostringstream os;
        os << "family parameter t=" << t << " outside [0, " << t_max_ << "]";
        throw PreconditionError(os.str());
    }
    return GridMapping::sample(grid_, 2, [&](std::span<const double> x, std::span<double> out) {
        const Complex z(x[0], x[1]);
        Complex w = horner(base_, z);
        if (kind_ == FamilyKind::planar_antiholomorphic_perturbation) {
            w += t * std::conj(z) * box_bump(grid_, x);
        } else {
            w *= 1.0 + t * std::norm(z);
        }
        out[0] = w.real();
        out[1] = w.imag();
    });
}

GridMapping add_scaled(const GridMapping& v, const GridMapping& w, double s) {
    require_same_grid(v.grid(), w.grid());
    if (v.m() != w.m()) throw DimensionError("add_scaled: target dimensions differ");
    std::vector<double> values = v.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * w.values()[i];
    return GridMapping(v.grid(), v.m(), std::move(values));
}

}  // namespace qcstab
