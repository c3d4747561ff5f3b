#ifndef REMLAB_VERIFICATION_HPP
#define REMLAB_VERIFICATION_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "remlab/dynamics.hpp"
#include "remlab/landscape.hpp"
#include "remlab/rng.hpp"
#include "remlab/scales.hpp"

namespace remlab {

// Arcsine distribution function Asl_alpha(w) = I_w(alpha, 1-alpha).
double arcsine_cdf(double alpha, double w);

// ---------------------------------------------------------------------------
// Window samplers. The estimators are written against this interface so their
// statistical machinery (paired windows, truncation, tails) can be unit-tested
// on toy chains with closed-form block laws.

class BlockSampler {
public:
    virtual ~BlockSampler() = default;
    virtual Vertex draw_stationary(RngStream& rng) const = 0;
    virtual Vertex draw_uniform(RngStream& rng) const = 0;
    // One block increment Z from the given start.
    virtual double window_z(Vertex start, RngStream& rng, bool* censored) const = 0;
};

// Production sampler: exploration windows of length theta on the REM
// environment, Z = c_n^{-1} * integral of max(eta, tau(Y(s))) ds.
class RemWindowSampler : public BlockSampler {
public:
    RemWindowSampler(const Environment& env, const ScaleSet& scales,
                     std::uint64_t event_ceiling = kDefaultEventCeiling);

    Vertex draw_stationary(RngStream& rng) const override;
    Vertex draw_uniform(RngStream& rng) const override;
    double window_z(Vertex start, RngStream& rng, bool* censored) const override;

    const RateModel& model() const { return model_; }
    const StationaryMeasure& pi() const { return pi_; }
    double theta() const { return theta_; }
    double c_n() const { return c_n_; }
    double z_floor() const { return theta_ * model_.eta() / c_n_; }

private:
    const Environment* env_;
    RateModel model_;
    StationaryMeasure pi_;
    double theta_;
    double c_n_;
    std::uint64_t ceiling_;
};

// ---------------------------------------------------------------------------
// Tail estimates

struct TailEstimate {
    std::vector<double> grid;      // u values (or truncation levels)
    std::vector<double> values;    // raw estimate, already scaled by k_factor
    std::vector<double> cleaned;   // isotonic nonincreasing fit of values
    std::vector<double> ci_lo, ci_hi;
    std::size_t replicas = 0;
    std::size_t censored = 0;
    double t = 0.0;
    double k_factor = 1.0;
};

// nu_n^t(u,inf) = k_n(t) P_pi(Z > u): independent stationary windows.
TailEstimate nu_estimator(const BlockSampler& sampler, double k_factor, double t,
                          const std::vector<double>& u_grid, std::size_t replicas,
                          const SeedLedger& ledger, unsigned threads = 0);

// Joint nu/sigma estimate by paired windows from a common stationary start;
// sigma uses the conditionally independent pair, nu the first window, so
// sigma <= nu holds sample-by-sample.
struct NuSigmaPair {
    TailEstimate nu;
    TailEstimate sigma;
};
NuSigmaPair nu_sigma_paired(const BlockSampler& sampler, double k_factor, double t,
                            const std::vector<double>& u_grid, std::size_t pairs,
                            const SeedLedger& ledger, unsigned threads = 0);

// k_n(t) E[Z 1{Z <= eps}] on a grid of truncation levels.
TailEstimate truncated_mean(const BlockSampler& sampler, double k_factor, double t,
                            const std::vector<double>& eps_grid, std::size_t replicas,
                            const SeedLedger& ledger, unsigned threads = 0);

// Condition (A0): tail of the first block from uniform starts, no k factor.
TailEstimate a0_check(const BlockSampler& sampler, const std::vector<double>& u_grid,
                      std::size_t replicas, const SeedLedger& ledger, unsigned threads = 0);

// ---------------------------------------------------------------------------
// b_n estimation

struct BnEstimate {
    double b_n = 0.0;
    double b_circ = 0.0;
    double se_b_n = 0.0;
    double se_b_circ = 0.0;
    std::size_t windows = 0;
    std::size_t windows_visiting_top = 0;
    bool degenerate = false;  // no window visited the top
};

BnEstimate bn_monte_carlo(const Environment& env, const ScaleSet& scales, const TopSets& tops,
                          std::size_t replicas, const SeedLedger& ledger,
                          std::uint64_t event_ceiling = kDefaultEventCeiling, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Blocked-clock marginals

// Per-replica samples of S_n^b(t) = c_n^{-1} S~(theta k_n(t)).
std::vector<double> blocked_clock_samples(const Environment& env, const ScaleSet& scales, double t,
                                          std::size_t replicas, const SeedLedger& ledger,
                                          InitialLaw init = InitialLaw::kUniform,
                                          std::uint64_t event_ceiling = kDefaultEventCeiling,
                                          unsigned threads = 0);

struct SubordinatorCheck {
    std::vector<double> lambda_grid;
    std::vector<double> empirical;   // E^[exp(-lambda S)]
    std::vector<double> target;      // exp(-t Gamma(1-alpha) lambda^alpha)
    std::vector<double> deviation;   // |empirical - target|
    std::vector<double> ci_half;     // bootstrap half-widths
    std::size_t replicas = 0;
    bool low_power = false;
};

SubordinatorCheck subordinator_marginal_check(const std::vector<double>& samples, double alpha, double t,
                                              const std::vector<double>& lambda_grid,
                                              const SeedLedger& ledger);

// ---------------------------------------------------------------------------
// Aging

struct AgingRow {
    double t = 0.0, s = 0.0;
    double ratio = 0.0;       // t/(t+s)
    double estimate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double limit = 0.0;       // Asl_alpha(ratio)
    double deviation = 0.0;
    std::size_t replicas = 0, censored = 0;
};

struct AgingReport {
    double alpha = 0.0;
    std::vector<AgingRow> rows;
    bool ratio_consistent = true;  // same-ratio pairs agree within joint 95% CI
    double worst_pair_z = 0.0;
};

AgingReport aging_report(const Environment& env, const ScaleSet& scales,
                         const std::vector<std::pair<double, double>>& pairs, std::size_t replicas,
                         const SeedLedger& ledger,
                         std::uint64_t event_ceiling = kDefaultEventCeiling, unsigned threads = 0);

} // namespace remlab

#endif
