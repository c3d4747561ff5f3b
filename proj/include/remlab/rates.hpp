#ifndef REMLAB_RATES_HPP
#define REMLAB_RATES_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "remlab/environment.hpp"
#include "remlab/rng.hpp"

namespace remlab {

enum class ChainMode { kMetropolis, kExploration };

// Jump rates of the Metropolis chain and of the exploration chain.
//
//   metropolis:   lambda(x,y)  = (1/n) exp(-beta [H(y)-H(x)]^+)
//   exploration:  lambda~(x,y) = max(eta, tau(x)) * lambda(x,y)
//
// The exploration clock integrand is the same factor max(eta, tau(x)), so the
// model also serves as the clock-weight oracle. eta is a free regularizer;
// production runs take eta = 1/r_star.
class RateModel {
public:
    RateModel(const Environment& env, ChainMode mode, double eta = 0.0)
        : env_(&env), mode_(mode), eta_(eta), n_(env.n()) {
        if (mode == ChainMode::kExploration && eta < 0.0)
            throw std::domain_error("RateModel: eta must be >= 0");
    }

    static RateModel metropolis(const Environment& env) { return RateModel(env, ChainMode::kMetropolis); }
    static RateModel exploration(const Environment& env, double eta) {
        return RateModel(env, ChainMode::kExploration, eta);
    }

    const Environment& env() const { return *env_; }
    ChainMode mode() const { return mode_; }
    double eta() const { return eta_; }
    unsigned n() const { return n_; }

    double metropolis_rate(Vertex x, unsigned bit) const {
        double dh = env_->hamiltonian(flip_bit(x, bit)) - env_->hamiltonian(x);
        return std::exp(-env_->beta() * std::max(dh, 0.0)) / n_;
    }

    double rate(Vertex x, unsigned bit) const {
        double base = metropolis_rate(x, bit);
        if (mode_ == ChainMode::kMetropolis) return base;
        return std::max(eta_, env_->tau(x)) * base;
    }

    // Integrand of the continuous-time clock at x (exploration mode).
    double clock_weight(Vertex x) const { return std::max(eta_, env_->tau(x)); }

    double total_rate(Vertex x) const {
        if (tables_built_) return total_[x];
        double s = 0.0;
        for (unsigned b = 0; b < n_; ++b) s += rate(x, b);
        return s;
    }

    // Precompute per-vertex total rates and cumulative neighbor rates so the
    // event loop is table lookups. Same summation order as the on-the-fly
    // path, so trajectories are identical with or without tables.
    void build_tables() {
        if (tables_built_) return;
        if (n_ > 20) throw std::domain_error("RateModel: rate tables limited to n <= 20");
        std::size_t m = env_->size();
        total_.assign(m, 0.0);
        cum_.assign(m * n_, 0.0);
        for (std::size_t x = 0; x < m; ++x) {
            double c = 0.0;
            for (unsigned b = 0; b < n_; ++b) {
                c += rate_uncached(static_cast<Vertex>(x), b);
                cum_[x * n_ + b] = c;
            }
            total_[x] = c;
        }
        tables_built_ = true;
    }
    bool tables_built() const { return tables_built_; }

    // Draw the jump target; the two modes share this law exactly since the
    // exploration factor max(eta,tau(x)) is constant over the neighbors of x.
    Vertex sample_jump(Vertex x, RngStream& rng) const {
        double u = rng.next_unit() * total_rate(x);
        if (tables_built_) {
            const double* row = &cum_[std::size_t(x) * n_];
            unsigned b = static_cast<unsigned>(std::lower_bound(row, row + n_, u) - row);
            if (b >= n_) b = n_ - 1;
            return flip_bit(x, b);
        }
        double c = 0.0;
        for (unsigned b = 0; b + 1 < n_; ++b) {
            c += rate(x, b);
            if (u < c) return flip_bit(x, b);
        }
        return flip_bit(x, n_ - 1);
    }

    std::vector<double> jump_distribution(Vertex x) const {
        std::vector<double> p(n_);
        double tot = 0.0;
        for (unsigned b = 0; b < n_; ++b) {
            p[b] = rate(x, b);
            tot += p[b];
        }
        for (double& v : p) v /= tot;
        return p;
    }

private:
    double rate_uncached(Vertex x, unsigned b) const {
        double dh = env_->hamiltonian(flip_bit(x, b)) - env_->hamiltonian(x);
        double base = std::exp(-env_->beta() * std::max(dh, 0.0)) / n_;
        if (mode_ == ChainMode::kMetropolis) return base;
        return std::max(eta_, env_->tau(x)) * base;
    }

    const Environment* env_;
    ChainMode mode_;
    double eta_;
    unsigned n_;
    bool tables_built_ = false;
    std::vector<double> total_;
    std::vector<double> cum_;
};

// Invariant measure of the exploration chain with eta = 1/r_star:
// pi(x) proportional to min(1, r_star * tau(x)); the normalizer is computed
// by a full scan. Exact sampling through a CDF table.
class StationaryMeasure {
public:
    StationaryMeasure(const Environment& env, double r_star) : env_(&env), r_star_(r_star) {
        if (env.n() > 24) throw std::domain_error("StationaryMeasure: scan limited to n <= 24");
        double z = 0.0;
        for (std::size_t x = 0; x < env.size(); ++x) z += weight(static_cast<Vertex>(x));
        z_ = z;
    }

    double r_star() const { return r_star_; }
    double weight(Vertex x) const { return std::min(1.0, r_star_ * env_->tau(x)); }
    double z() const { return z_; }
    double pi(Vertex x) const { return weight(x) / z_; }

    template <typename Container>
    double pi_of(const Container& set) const {
        double s = 0.0;
        for (Vertex x : set) s += pi(x);
        return s;
    }

    void build_sampler() {
        if (!cdf_.empty()) return;
        if (env_->n() > 20) throw std::domain_error("StationaryMeasure: sampler table limited to n <= 20");
        cdf_.resize(env_->size());
        double c = 0.0;
        for (std::size_t x = 0; x < cdf_.size(); ++x) {
            c += weight(static_cast<Vertex>(x));
            cdf_[x] = c;
        }
    }

    Vertex sample(RngStream& rng) const {
        if (cdf_.empty()) throw std::logic_error("StationaryMeasure: call build_sampler() first");
        double u = rng.next_unit() * cdf_.back();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<Vertex>(it - cdf_.begin());
    }

private:
    const Environment* env_;
    double r_star_;
    double z_ = 0.0;
    std::vector<double> cdf_;
};

} // namespace remlab

#endif
