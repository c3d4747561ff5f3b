#include "remlab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "remlab/pool.hpp"
#include "remlab/special.hpp"
#include "remlab/stats.hpp"

namespace remlab {

double arcsine_cdf(double alpha, double w) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("arcsine_cdf: alpha must be in (0,1)");
    if (w < 0.0 || w > 1.0) throw std::domain_error("arcsine_cdf: w must be in [0,1]");
    return reg_inc_beta(alpha, 1.0 - alpha, w);
}

// ---------------------------------------------------------------------------

namespace {

struct ClockOnlyObserver {
    const RateModel* model;
    Kahan clock;
    bool arrive(Vertex, double) { return true; }
    bool segment(Vertex x, double, double dt, bool) {
        clock.add(model->clock_weight(x) * dt);
        return true;
    }
};

} // namespace

RemWindowSampler::RemWindowSampler(const Environment& env, const ScaleSet& scales,
                                   std::uint64_t event_ceiling)
    : env_(&env),
      model_(RateModel::exploration(env, 1.0 / scales.r_star)),
      pi_(env, scales.r_star),
      theta_(scales.theta),
      c_n_(scales.c_n),
      ceiling_(event_ceiling) {
    if (env.n() <= 18) model_.build_tables();
    pi_.build_sampler();
}

Vertex RemWindowSampler::draw_stationary(RngStream& rng) const { return pi_.sample(rng); }

Vertex RemWindowSampler::draw_uniform(RngStream& rng) const {
    return static_cast<Vertex>(rng.next_below(env_->size()));
}

double RemWindowSampler::window_z(Vertex start, RngStream& rng, bool* censored) const {
    ClockOnlyObserver obs{&model_, Kahan{}};
    PathEnd end = run_path(model_, start, theta_, rng, obs, ceiling_);
    if (censored) *censored = end.censored;
    return obs.clock.value() / c_n_;
}

// ---------------------------------------------------------------------------

namespace {

struct CountChunk {
    std::vector<std::size_t> counts;
    std::size_t censored = 0;
};

TailEstimate tail_from_counts(const std::vector<double>& grid, const std::vector<std::size_t>& counts,
                              std::size_t replicas, double k_factor, double t, std::size_t censored) {
    TailEstimate est;
    est.grid = grid;
    est.replicas = replicas;
    est.censored = censored;
    est.t = t;
    est.k_factor = k_factor;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        WilsonCI ci = wilson_interval(counts[j], replicas);
        est.values.push_back(k_factor * ci.estimate);
        est.ci_lo.push_back(k_factor * ci.lo);
        est.ci_hi.push_back(k_factor * ci.hi);
    }
    est.cleaned = isotonic_nonincreasing(est.values);
    return est;
}

} // namespace

TailEstimate nu_estimator(const BlockSampler& sampler, double k_factor, double t,
                          const std::vector<double>& u_grid, std::size_t replicas,
                          const SeedLedger& ledger, unsigned threads) {
    auto chunks = map_replica_chunks<CountChunk>(replicas, threads, [&](std::size_t lo, std::size_t hi) {
        CountChunk c;
        c.counts.assign(u_grid.size(), 0);
        for (std::size_t r = lo; r < hi; ++r) {
            RngStream rng = ledger.stream("nu", r);
            Vertex y = sampler.draw_stationary(rng);
            bool cens = false;
            double z = sampler.window_z(y, rng, &cens);
            if (cens) ++c.censored;
            for (std::size_t j = 0; j < u_grid.size(); ++j)
                if (z > u_grid[j]) ++c.counts[j];
        }
        return c;
    });
    std::vector<std::size_t> counts(u_grid.size(), 0);
    std::size_t censored = 0;
    for (const auto& c : chunks) {
        censored += c.censored;
        for (std::size_t j = 0; j < u_grid.size(); ++j) counts[j] += c.counts[j];
    }
    return tail_from_counts(u_grid, counts, replicas, k_factor, t, censored);
}

NuSigmaPair nu_sigma_paired(const BlockSampler& sampler, double k_factor, double t,
                            const std::vector<double>& u_grid, std::size_t pairs,
                            const SeedLedger& ledger, unsigned threads) {
    struct PairChunk {
        std::vector<std::size_t> nu, sigma;
        std::size_t censored = 0;
    };
    auto chunks = map_replica_chunks<PairChunk>(pairs, threads, [&](std::size_t lo, std::size_t hi) {
        PairChunk c;
        c.nu.assign(u_grid.size(), 0);
        c.sigma.assign(u_grid.size(), 0);
        for (std::size_t r = lo; r < hi; ++r) {
            RngStream rng = ledger.stream("nusigma", r);
            Vertex y = sampler.draw_stationary(rng);
            bool c1 = false, c2 = false;
            double z1 = sampler.window_z(y, rng, &c1);
            double z2 = sampler.window_z(y, rng, &c2);
            if (c1 || c2) ++c.censored;
            for (std::size_t j = 0; j < u_grid.size(); ++j) {
                bool h1 = z1 > u_grid[j];
                if (h1) ++c.nu[j];
                if (h1 && z2 > u_grid[j]) ++c.sigma[j];
            }
        }
        return c;
    });
    std::vector<std::size_t> counts_nu(u_grid.size(), 0), counts_sigma(u_grid.size(), 0);
    std::size_t censored = 0;
    for (const auto& c : chunks) {
        censored += c.censored;
        for (std::size_t j = 0; j < u_grid.size(); ++j) {
            counts_nu[j] += c.nu[j];
            counts_sigma[j] += c.sigma[j];
        }
    }
    NuSigmaPair out;
    out.nu = tail_from_counts(u_grid, counts_nu, pairs, k_factor, t, censored);
    out.sigma = tail_from_counts(u_grid, counts_sigma, pairs, k_factor, t, censored);
    return out;
}

TailEstimate truncated_mean(const BlockSampler& sampler, double k_factor, double t,
                            const std::vector<double>& eps_grid, std::size_t replicas,
                            const SeedLedger& ledger, unsigned threads) {
    struct MeanChunk {
        std::vector<double> sum, sq;
        std::size_t censored = 0;
    };
    auto chunks = map_replica_chunks<MeanChunk>(replicas, threads, [&](std::size_t lo, std::size_t hi) {
        MeanChunk c;
        std::vector<Kahan> sums(eps_grid.size()), sqs(eps_grid.size());
        for (std::size_t r = lo; r < hi; ++r) {
            RngStream rng = ledger.stream("truncmean", r);
            Vertex y = sampler.draw_stationary(rng);
            bool cens = false;
            double z = sampler.window_z(y, rng, &cens);
            if (cens) ++c.censored;
            for (std::size_t j = 0; j < eps_grid.size(); ++j) {
                double v = (z <= eps_grid[j]) ? z : 0.0;
                sums[j].add(v);
                sqs[j].add(v * v);
            }
        }
        for (std::size_t j = 0; j < eps_grid.size(); ++j) {
            c.sum.push_back(sums[j].value());
            c.sq.push_back(sqs[j].value());
        }
        return c;
    });
    std::vector<Kahan> sum(eps_grid.size()), sq(eps_grid.size());
    std::size_t censored = 0;
    for (const auto& c : chunks) {
        censored += c.censored;
        for (std::size_t j = 0; j < eps_grid.size(); ++j) {
            sum[j].add(c.sum[j]);
            sq[j].add(c.sq[j]);
        }
    }
    TailEstimate est;
    est.grid = eps_grid;
    est.replicas = replicas;
    est.censored = censored;
    est.t = t;
    est.k_factor = k_factor;
    for (std::size_t j = 0; j < eps_grid.size(); ++j) {
        double mean = sum[j].value() / replicas;
        double var = std::max(0.0, sq[j].value() / replicas - mean * mean);
        double se = std::sqrt(var / replicas);
        est.values.push_back(k_factor * mean);
        est.ci_lo.push_back(k_factor * std::max(0.0, mean - 1.96 * se));
        est.ci_hi.push_back(k_factor * (mean + 1.96 * se));
    }
    est.cleaned = est.values;  // monotone increasing in eps by construction
    return est;
}

TailEstimate a0_check(const BlockSampler& sampler, const std::vector<double>& u_grid,
                      std::size_t replicas, const SeedLedger& ledger, unsigned threads) {
    auto chunks = map_replica_chunks<CountChunk>(replicas, threads, [&](std::size_t lo, std::size_t hi) {
        CountChunk c;
        c.counts.assign(u_grid.size(), 0);
        for (std::size_t r = lo; r < hi; ++r) {
            RngStream rng = ledger.stream("a0", r);
            Vertex y = sampler.draw_uniform(rng);
            bool cens = false;
            double z = sampler.window_z(y, rng, &cens);
            if (cens) ++c.censored;
            for (std::size_t j = 0; j < u_grid.size(); ++j)
                if (z > u_grid[j]) ++c.counts[j];
        }
        return c;
    });
    std::vector<std::size_t> counts(u_grid.size(), 0);
    std::size_t censored = 0;
    for (const auto& c : chunks) {
        censored += c.censored;
        for (std::size_t j = 0; j < u_grid.size(); ++j) counts[j] += c.counts[j];
    }
    return tail_from_counts(u_grid, counts, replicas, 1.0, 0.0, censored);
}

// ---------------------------------------------------------------------------

namespace {

// Accumulates local times at top vertices and tracks the first entry into the
// alone-in-their-valley subset.
struct TopWindowObserver {
    const VertexSet* t_n;
    const VertexSet* t_circ;
    std::unordered_map<Vertex, double>* top_local;
    Vertex first_circ = 0;
    bool entered_circ = false;

    bool arrive(Vertex x, double) {
        if (!entered_circ && t_circ->contains(x)) {
            entered_circ = true;
            first_circ = x;
        }
        return true;
    }
    bool segment(Vertex x, double, double dt, bool) {
        if (t_n->contains(x)) (*top_local)[x] += dt;
        return true;
    }
};

} // namespace

BnEstimate bn_monte_carlo(const Environment& env, const ScaleSet& scales, const TopSets& tops,
                          std::size_t replicas, const SeedLedger& ledger, std::uint64_t event_ceiling,
                          unsigned threads) {
    RateModel model = RateModel::exploration(env, 1.0 / scales.r_star);
    if (env.n() <= 18) model.build_tables();
    StationaryMeasure pi(env, scales.r_star);
    pi.build_sampler();

    const double theta = scales.theta;
    double pi_t = pi.pi_of(tops.t_n);
    double pi_tc = pi.pi_of(tops.t_circ);
    if (pi_t <= 0.0) throw std::domain_error("bn_monte_carlo: empty top set");
    const bool circ_defined = pi_tc > 0.0;

    VertexSet set_t(env.n(), tops.t_n);
    VertexSet set_tc(env.n(), tops.t_circ);

    struct BnChunk {
        double sn = 0, sn2 = 0, sc = 0, sc2 = 0;
        std::size_t visiting = 0;
    };
    auto chunks = map_replica_chunks<BnChunk>(replicas, threads, [&](std::size_t lo, std::size_t hi) {
        BnChunk c;
        Kahan sn, sn2, sc, sc2;
        for (std::size_t r = lo; r < hi; ++r) {
            RngStream rng = ledger.stream("bn", r);
            Vertex start = pi.sample(rng);
            std::unordered_map<Vertex, double> top_local;
            TopWindowObserver obs{&set_t, &set_tc, &top_local};
            run_path(model, start, theta, rng, obs, event_ceiling);

            double wn = 0.0;
            for (const auto& [x, l] : top_local) wn += f_function(scales, l);
            double wc = (obs.entered_circ && top_local.count(obs.first_circ))
                            ? f_function(scales, top_local[obs.first_circ])
                            : 0.0;
            if (!top_local.empty()) ++c.visiting;
            sn.add(wn);
            sn2.add(wn * wn);
            sc.add(wc);
            sc2.add(wc * wc);
        }
        c.sn = sn.value();
        c.sn2 = sn2.value();
        c.sc = sc.value();
        c.sc2 = sc2.value();
        return c;
    });

    Kahan sum_n, sum_n2, sum_c, sum_c2;
    std::size_t visiting = 0;
    for (const auto& c : chunks) {
        sum_n.add(c.sn);
        sum_n2.add(c.sn2);
        sum_c.add(c.sc);
        sum_c2.add(c.sc2);
        visiting += c.visiting;
    }

    BnEstimate est;
    est.windows = replicas;
    est.windows_visiting_top = visiting;
    est.degenerate = (visiting == 0);
    double mean_n = sum_n.value() / replicas;
    double mean_c = sum_c.value() / replicas;
    double var_n = std::max(0.0, sum_n2.value() / replicas - mean_n * mean_n);
    double var_c = std::max(0.0, sum_c2.value() / replicas - mean_c * mean_c);
    est.b_n = mean_n / (theta * pi_t);
    est.se_b_n = std::sqrt(var_n / replicas) / (theta * pi_t);
    if (circ_defined) {
        est.b_circ = mean_c / (theta * pi_tc);
        est.se_b_circ = std::sqrt(var_c / replicas) / (theta * pi_tc);
    } else {
        est.b_circ = std::numeric_limits<double>::quiet_NaN();
        est.se_b_circ = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

// ---------------------------------------------------------------------------

std::vector<double> blocked_clock_samples(const Environment& env, const ScaleSet& scales, double t,
                                          std::size_t replicas, const SeedLedger& ledger,
                                          InitialLaw init, std::uint64_t event_ceiling,
                                          unsigned threads) {
    if (std::isnan(scales.a_n)) throw std::domain_error("blocked_clock_samples: b_n not set");
    double k = scales.k_n(t);
    if (k < 1.0) throw std::domain_error("blocked_clock_samples: k_n(t) < 1; adjust theta or t");
    double horizon = scales.theta * k;

    RateModel model = RateModel::exploration(env, 1.0 / scales.r_star);
    if (env.n() <= 18) model.build_tables();
    StationaryMeasure pi(env, scales.r_star);
    if (init == InitialLaw::kStationary) pi.build_sampler();

    auto chunks =
        map_replica_chunks<std::vector<double>>(replicas, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> vals;
            vals.reserve(hi - lo);
            for (std::size_t r = lo; r < hi; ++r) {
                RngStream rng = ledger.stream("sbt", r);
                Vertex start = (init == InitialLaw::kUniform)
                                   ? static_cast<Vertex>(rng.next_below(env.size()))
                                   : pi.sample(rng);
                ClockOnlyObserver obs{&model, Kahan{}};
                run_path(model, start, horizon, rng, obs, event_ceiling);
                vals.push_back(obs.clock.value() / scales.c_n);
            }
            return vals;
        });
    std::vector<double> out;
    out.reserve(replicas);
    for (auto& c : chunks) out.insert(out.end(), c.begin(), c.end());
    return out;
}

SubordinatorCheck subordinator_marginal_check(const std::vector<double>& samples, double alpha, double t,
                                              const std::vector<double>& lambda_grid,
                                              const SeedLedger& ledger) {
    SubordinatorCheck chk;
    chk.lambda_grid = lambda_grid;
    chk.replicas = samples.size();
    chk.low_power = samples.size() < 100;

    const std::size_t boot = 200;
    for (double lam : lambda_grid) {
        Kahan acc;
        for (double s : samples) acc.add(std::exp(-lam * s));
        double emp = acc.value() / samples.size();
        double target = std::exp(-t * std::tgamma(1.0 - alpha) * std::pow(lam, alpha));
        chk.empirical.push_back(emp);
        chk.target.push_back(target);
        chk.deviation.push_back(std::fabs(emp - target));

        // bootstrap half-width
        std::vector<double> means;
        means.reserve(boot);
        RngStream rng = ledger.stream("bootstrap", static_cast<std::uint64_t>(lam * 1e6));
        for (std::size_t b = 0; b < boot; ++b) {
            Kahan a2;
            for (std::size_t i = 0; i < samples.size(); ++i)
                a2.add(std::exp(-lam * samples[rng.next_below(samples.size())]));
            means.push_back(a2.value() / samples.size());
        }
        std::sort(means.begin(), means.end());
        double lo = means[static_cast<std::size_t>(0.025 * boot)];
        double hi = means[static_cast<std::size_t>(0.975 * boot)];
        chk.ci_half.push_back(0.5 * (hi - lo));
    }
    return chk;
}

// ---------------------------------------------------------------------------

AgingReport aging_report(const Environment& env, const ScaleSet& scales,
                         const std::vector<std::pair<double, double>>& pairs, std::size_t replicas,
                         const SeedLedger& ledger, std::uint64_t event_ceiling, unsigned threads) {
    if (!scales.aging_regime) throw std::domain_error("aging_report: beta must exceed beta_c");
    AgingReport rep;
    rep.alpha = scales.alpha;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto [t, s] = pairs[i];
        SeedLedger sub{RngStream::derive_key(ledger.master, 0xA61, i)};
        CorrelationEstimate ce =
            correlation(env, scales, t, s, replicas, sub, InitialLaw::kUniform, event_ceiling, threads);
        AgingRow row;
        row.t = t;
        row.s = s;
        row.ratio = t / (t + s);
        row.estimate = ce.estimate;
        row.ci_lo = ce.ci_lo;
        row.ci_hi = ce.ci_hi;
        row.limit = arcsine_cdf(scales.alpha, row.ratio);
        row.deviation = std::fabs(row.estimate - row.limit);
        row.replicas = ce.replicas_done;
        row.censored = ce.censored;
        rep.rows.push_back(row);
    }
    // ratio invariance: same-ratio rows must agree within a joint 95% interval
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rep.rows.size(); ++j) {
            if (std::fabs(rep.rows[i].ratio - rep.rows[j].ratio) > 1e-12) continue;
            double p1 = rep.rows[i].estimate, p2 = rep.rows[j].estimate;
            double se1 = (rep.rows[i].ci_hi - rep.rows[i].ci_lo) / (2 * 1.96);
            double se2 = (rep.rows[j].ci_hi - rep.rows[j].ci_lo) / (2 * 1.96);
            double z = std::fabs(p1 - p2) / std::sqrt(se1 * se1 + se2 * se2 + 1e-300);
            rep.worst_pair_z = std::max(rep.worst_pair_z, z);
            if (z > 1.96) rep.ratio_consistent = false;
        }
    }
    return rep;
}

} // namespace remlab
