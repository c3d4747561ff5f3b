#ifndef REMLAB_ENVIRONMENT_HPP
#define REMLAB_ENVIRONMENT_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "remlab/rng.hpp"
#include "remlab/special.hpp"

namespace remlab {

// A configuration of the n-cube: bit i is spin i, {-1,+1} encoded as {0,1}.
using Vertex = std::uint32_t;

inline Vertex flip_bit(Vertex x, unsigned i) { return x ^ (Vertex(1) << i); }

// The n single-bit flips of x, ascending bit order.
inline std::vector<Vertex> neighbors(Vertex x, unsigned n) {
    std::vector<Vertex> out;
    out.reserve(n);
    for (unsigned i = 0; i < n; ++i) out.push_back(flip_bit(x, i));
    return out;
}

// Seeded random environment: i.i.d. N(0,n) energies on the n-cube and the
// Gibbs masses tau(x) = exp(-beta * H(x)).
//
// Generation is counter-based: a 64-bit mix of (seed, x) gives a uniform word,
// the energy is sqrt(n) * Phi^{-1}((word + 0.5)/2^64). O(1) memory, random
// access, and bit-identical on every call. An optional dense cache (n <= 24)
// stores the same values; cached and uncached reads agree exactly because the
// cache is filled through the identical generation path.
class Environment {
public:
    static constexpr unsigned kMaxCacheDim = 24;

    Environment(unsigned n, double beta, std::uint64_t seed, bool cache = false)
        : n_(n), beta_(beta), seed_(seed), sqrt_n_(std::sqrt(double(n))) {
        if (n < 1 || n > 31) throw std::domain_error("Environment: dimension out of range");
        if (beta < 0.0) throw std::domain_error("Environment: beta must be >= 0");
        if (cache) {
            if (n > kMaxCacheDim) throw std::domain_error("Environment: cache limited to n <= 24");
            cache_.resize(std::size_t(1) << n);
            for (std::size_t x = 0; x < cache_.size(); ++x)
                cache_[x] = generate(static_cast<Vertex>(x));
            cached_ = true;
        }
    }

    unsigned n() const { return n_; }
    double beta() const { return beta_; }
    std::uint64_t seed() const { return seed_; }
    bool cached() const { return cached_; }
    std::size_t size() const { return std::size_t(1) << n_; }

    double hamiltonian(Vertex x) const {
        check_vertex(x);
        return cached_ ? cache_[x] : generate(x);
    }

    // tau(x) = exp(-beta H(x)). Overflow to infinity is an error, not a
    // silent saturation: the clock integrals would be garbage past that point.
    double tau(Vertex x) const {
        double t = std::exp(-beta_ * hamiltonian(x));
        if (!std::isfinite(t)) throw std::overflow_error("Environment::tau overflow");
        return t;
    }

    std::vector<Vertex> neighbor_list(Vertex x) const {
        check_vertex(x);
        return neighbors(x, n_);
    }

private:
    void check_vertex(Vertex x) const {
        if (x >= (Vertex(1) << n_)) throw std::domain_error("Environment: vertex out of range");
    }

    double generate(Vertex x) const {
        std::uint64_t w = keyed_word(seed_, x);
        return sqrt_n_ * norm_inv_cdf(u64_to_unit(w));
    }

    unsigned n_;
    double beta_;
    std::uint64_t seed_;
    double sqrt_n_;
    bool cached_ = false;
    std::vector<double> cache_;
};

} // namespace remlab

#endif
