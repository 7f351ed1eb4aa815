#pragma once

#include "qcstab/grid.hpp"
#include "qcstab/integrand.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qcstab {

using Complex = std::complex<double>;

/// Planar mapping z -> sum c_j z^j, with z = x1 + i x2.
GridMapping holomorphic_polynomial(const Grid& grid, std::span<const Complex> coefficients);

/// prod_a (1 - s_a^2)^2 with s_a the axis coordinate rescaled to [-1, 1]. Smooth,
/// vanishing to second order on the boundary of the box.
double box_bump(const Grid& grid, std::span<const double> x);

ScalarField box_bump_field(const Grid& grid);

/// Smooth test mapping vanishing on the boundary of the box:
/// phi_mu = prod_a r_a (1 - r_a) * (c0 + sum_a c_a r_a + sum_a d_a r_a r_{a+1}),
/// r_a the coordinate rescaled to [0, 1], coefficients uniform in [-1, 1]
/// from mt19937_64(seed).
GridMapping random_bump_test_function(const Grid& grid, int m, std::uint64_t seed);

enum class FamilyKind {
    planar_antiholomorphic_perturbation,  // v_t = f(z) + t conj(z) bump
    planar_radial_stretch,                // v_t = f(z) (1 + t |z|^2)
    custom_sampled,                       // explicit (t, v_t) samples
};

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& s);

/// Parametric family t -> v_t on a fixed grid. Built-in kinds have
/// uniformly bounded, equicontinuous members for t in [0, t_max].
class MappingFamily {
public:
    static MappingFamily antiholomorphic_perturbation(InstancePair instance, Grid grid,
                                                      std::vector<Complex> base = {0.0, 1.0}, double t_max = 1.0);
    static MappingFamily radial_stretch(InstancePair instance, Grid grid, std::vector<Complex> base = {0.0, 1.0},
                                        double t_max = 1.0);
    static MappingFamily custom_sampled(InstancePair instance, std::vector<std::pair<double, GridMapping>> samples);

    FamilyKind kind() const noexcept { return kind_; }
    const InstancePair& instance() const noexcept { return instance_; }
    const Grid& grid() const noexcept { return grid_; }
    double t_max() const noexcept { return t_max_; }

    /// Member at parameter t. For custom families t must match a sample exactly.
    GridMapping at(double t) const;

private:
    MappingFamily(FamilyKind kind, InstancePair instance, Grid grid, std::vector<Complex> base, double t_max);

    FamilyKind kind_;
    InstancePair instance_;
    Grid grid_;
    std::vector<Complex> base_;
    double t_max_;
    std::vector<std::pair<double, GridMapping>> samples_;
};

/// v + s * w, node-wise.
GridMapping add_scaled(const GridMapping& v, const GridMapping& w, double s);

}  // namespace qcstab
