#ifndef REMLAB_DYNAMICS_HPP
#define REMLAB_DYNAMICS_HPP

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "remlab/rates.hpp"
#include "remlab/rng.hpp"
#include "remlab/scales.hpp"
#include "remlab/stats.hpp"

namespace remlab {

constexpr std::uint64_t kDefaultEventCeiling = 1'000'000'000;

struct PathEnd {
    double t = 0.0;
    Vertex state = 0;
    std::uint64_t events = 0;  // jumps executed
    bool stopped = false;      // observer requested stop
    bool censored = false;     // event ceiling hit
};

// Event-driven kernel. The observer sees every arrival and every holding
// segment; returning false from either stops the run. Draw order per event is
// fixed (holding time, then jump target), so trajectories are reproducible
// event-for-event from the stream key alone.
template <typename Obs>
PathEnd run_path(const RateModel& model, Vertex start, double horizon, RngStream& rng, Obs&& obs,
                 std::uint64_t event_ceiling = kDefaultEventCeiling) {
    PathEnd end;
    Vertex x = start;
    double t = 0.0;
    if (!obs.arrive(x, 0.0)) {
        end.state = x;
        end.stopped = true;
        return end;
    }
    while (true) {
        double rate = model.total_rate(x);
        double hold = rng.next_exponential(rate);
        double rem = horizon - t;
        if (hold >= rem) {
            if (rem > 0.0) obs.segment(x, t, rem, true);
            end.t = horizon;
            end.state = x;
            return end;
        }
        if (!obs.segment(x, t, hold, false)) {
            end.t = t;
            end.state = x;
            end.stopped = true;
            return end;
        }
        t += hold;
        ++end.events;
        x = model.sample_jump(x, rng);
        if (!obs.arrive(x, t)) {
            end.t = t;
            end.state = x;
            end.stopped = true;
            return end;
        }
        if (end.events >= event_ceiling) {
            end.t = t;
            end.state = x;
            end.censored = true;
            return end;
        }
    }
}

// Piecewise-constant path with holding times, local times, and (exploration
// mode) the continuous clock value.
struct Trajectory {
    std::vector<Vertex> states;
    std::vector<double> holds;
    double t_end = 0.0;
    std::unordered_map<Vertex, double> local_times;
    double clock_end = 0.0;  // integral of max(eta, tau(Y(s))) over [0, t_end]
    std::vector<std::pair<double, double>> clock_samples;  // (time, clock) at jump times
    std::uint64_t events = 0;
    bool censored = false;
};

struct SimulateOptions {
    std::uint64_t event_ceiling = kDefaultEventCeiling;
    bool record_path = true;
    bool record_clock_samples = false;
};

Trajectory simulate(const RateModel& model, Vertex start, double horizon, RngStream& rng,
                    const SimulateOptions& opt = {});

// The blocked clock increments Z_{n,i} = c_n^{-1} * (clock integral over block i).
struct BlockedClock {
    double theta = 0.0;
    double c_n = 0.0;
    std::vector<double> increments;
};

// Replays a recorded trajectory; errors if the horizon is shorter than theta*k.
BlockedClock blocked_clock(const RateModel& model, const Trajectory& traj, double theta,
                           std::size_t k, double c_n);

// X(t) = Y(Sinv(t)): simulate the exploration chain, accumulate the clock,
// report Y at the clock's first passage of each requested physical time.
struct TimeChangeResult {
    std::vector<Vertex> states;  // one per requested time
    bool censored = false;
    std::uint64_t events = 0;
};

TimeChangeResult time_change_evaluate(const RateModel& exploration, Vertex start,
                                      const std::vector<double>& physical_times, RngStream& rng,
                                      std::uint64_t event_ceiling = kDefaultEventCeiling);

struct HittingResult {
    double time = 0.0;
    Vertex where = 0;
    bool censored = false;
};

// First entrance time of the target set by simulation.
class VertexSet {
public:
    VertexSet(unsigned n, const std::vector<Vertex>& elems) : mask_((std::size_t(1) << n) / 64 + 1, 0) {
        for (Vertex v : elems) mask_[v >> 6] |= std::uint64_t(1) << (v & 63);
        empty_ = elems.empty();
    }
    bool contains(Vertex x) const { return (mask_[x >> 6] >> (x & 63)) & 1u; }
    bool empty() const { return empty_; }
private:
    std::vector<std::uint64_t> mask_;
    bool empty_ = true;
};

HittingResult hitting_time(const RateModel& model, Vertex start, const VertexSet& target, RngStream& rng,
                           std::uint64_t event_ceiling = kDefaultEventCeiling);

// Two-time correlation estimate P(X(c_n t) = X(c_n (t+s))) through the time
// change, with a Wilson 95% interval. Initial law: uniform (the default) or pi.
struct CorrelationEstimate {
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    std::size_t replicas_done = 0;
    std::size_t censored = 0;
    std::vector<std::int8_t> outcomes;  // per replica: 1 hit, 0 miss, -1 censored
};

enum class InitialLaw { kUniform, kStationary };

CorrelationEstimate correlation(const Environment& env, const ScaleSet& scales, double t, double s,
                                std::size_t replicas, const SeedLedger& ledger,
                                InitialLaw init = InitialLaw::kUniform,
                                std::uint64_t event_ceiling = kDefaultEventCeiling,
                                unsigned threads = 0);

} // namespace remlab

#endif
