#pragma once

#include <cstdint>
#include <vector>

namespace qcstab {

/// Halton sequence with a seeded Cranley-Patterson rotation. The rotation is
/// drawn from mt19937_64 bits directly, so points are identical on every
/// platform for a given (dim, seed).
class HaltonSequence {
public:
    HaltonSequence(int dim, std::uint64_t seed);

    int dim() const noexcept { return static_cast<int>(bases_.size()); }

    /// Next point in [0, 1)^dim.
    std::vector<double> next();

private:
    std::vector<int> bases_;
    std::vector<double> shift_;
    std::uint64_t index_ = 1;
};

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
inline double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Radical inverse of i in the given base.
double radical_inverse(std::uint64_t i, int base);

}  // namespace qcstab
