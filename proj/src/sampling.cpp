#include "qcstab/sampling.hpp"

#include "qcstab/error.hpp"

#include <cmath>
#include <random>

namespace qcstab {

namespace {

std::vector<int> first_primes(int count) {
    std::vector<int> primes;
    for (int c = 2; static_cast<int>(primes.size()) < count; ++c) {
        bool prime = true;
        for (int p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

}  // namespace

double radical_inverse(std::uint64_t i, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (i > 0) {
        result += static_cast<double>(i % static_cast<std::uint64_t>(base)) * f;
        i /= static_cast<std::uint64_t>(base);
        f /= base;
    }
    return result;
}

HaltonSequence::HaltonSequence(int dim, std::uint64_t seed) : bases_(first_primes(dim)) {
    if (dim < 1) throw PreconditionError("HaltonSequence: dim must be positive");
    std::mt19937_64 rng(seed);
    shift_.resize(static_cast<std::size_t>(dim));
    for (double& s : shift_) s = seed == 0 ? 0.0 : unit_from_bits(rng());
}

std::vector<double> HaltonSequence::next() {
    std::vector<double> x(bases_.size());
    for (std::size_t d = 0; d < bases_.size(); ++d) {
        double u = radical_inverse(index_, bases_[d]) + shift_[d];
        if (u >= 1.0) u -= 1.0;
        x[d] = u;
    }
    ++index_;
    return x;
}

}  // namespace qcstab
