#include "remlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "remlab/pool.hpp"

namespace remlab {

namespace {

struct TrajectoryObserver {
    const RateModel* model;
    Trajectory* out;
    bool record_path;
    bool record_clock_samples;
    bool exploration;
    Kahan clock;

    bool arrive(Vertex x, double t) {
        if (record_path) out->states.push_back(x);
        if (record_clock_samples && t > 0.0) out->clock_samples.emplace_back(t, clock.value());
        return true;
    }
    bool segment(Vertex x, double /*t0*/, double dt, bool /*truncated*/) {
        if (record_path) out->holds.push_back(dt);
        out->local_times[x] += dt;
        if (exploration) clock.add(model->clock_weight(x) * dt);
        return true;
    }
};

} // namespace

Trajectory simulate(const RateModel& model, Vertex start, double horizon, RngStream& rng,
                    const SimulateOptions& opt) {
    if (!(horizon > 0.0)) throw std::domain_error("simulate: horizon must be > 0");
    Trajectory traj;
    TrajectoryObserver obs{&model, &traj, opt.record_path, opt.record_clock_samples,
                           model.mode() == ChainMode::kExploration, Kahan{}};
    PathEnd end = run_path(model, start, horizon, rng, obs, opt.event_ceiling);
    traj.t_end = end.t;
    traj.events = end.events;
    traj.censored = end.censored;
    traj.clock_end = obs.clock.value();
    return traj;
}

BlockedClock blocked_clock(const RateModel& model, const Trajectory& traj, double theta, std::size_t k,
                           double c_n) {
    if (traj.states.empty()) throw std::domain_error("blocked_clock: trajectory has no recorded path");
    if (traj.t_end + 1e-12 * theta < theta * double(k))
        throw std::domain_error("blocked_clock: trajectory horizon shorter than theta*k");

    BlockedClock bc;
    bc.theta = theta;
    bc.c_n = c_n;
    std::vector<Kahan> acc(k);
    double t = 0.0;
    for (std::size_t i = 0; i < traj.states.size() && t < theta * double(k); ++i) {
        double w = model.clock_weight(traj.states[i]);
        double dt = (i < traj.holds.size()) ? traj.holds[i] : 0.0;
        double seg_start = t, seg_end = t + dt;
        // split the segment across block boundaries
        std::size_t first = static_cast<std::size_t>(std::floor(seg_start / theta));
        std::size_t last = static_cast<std::size_t>(std::floor((seg_end) / theta));
        for (std::size_t blk = first; blk <= last && blk < k; ++blk) {
            double lo = std::max(seg_start, theta * double(blk));
            double hi = std::min(seg_end, theta * double(blk + 1));
            if (hi > lo) acc[blk].add(w * (hi - lo));
        }
        t = seg_end;
    }
    bc.increments.reserve(k);
    for (auto& a : acc) bc.increments.push_back(a.value() / c_n);
    return bc;
}

namespace {

struct TimeChangeObserver {
    const RateModel* model;
    const std::vector<double>* targets;  // sorted ascending
    std::vector<Vertex>* states;
    std::size_t next = 0;
    Kahan clock;

    bool arrive(Vertex, double) { return true; }
    bool segment(Vertex x, double /*t0*/, double dt, bool /*truncated*/) {
        clock.add(model->clock_weight(x) * dt);
        double after = clock.value();
        // the right-continuous inverse: state at first strict passage
        while (next < targets->size() && (*targets)[next] < after) {
            (*states)[next] = x;
            ++next;
        }
        return next < targets->size();
    }
};

} // namespace

TimeChangeResult time_change_evaluate(const RateModel& exploration, Vertex start,
                                      const std::vector<double>& physical_times, RngStream& rng,
                                      std::uint64_t event_ceiling) {
    if (exploration.mode() != ChainMode::kExploration)
        throw std::domain_error("time_change_evaluate: needs the exploration model");
    for (std::size_t i = 1; i < physical_times.size(); ++i)
        if (physical_times[i] < physical_times[i - 1])
            throw std::domain_error("time_change_evaluate: times must be sorted");

    TimeChangeResult res;
    res.states.assign(physical_times.size(), start);
    // requested time 0 (or any time before the first clock movement) maps to
    // the start state; the observer fills the rest.
    std::size_t lead = 0;
    while (lead < physical_times.size() && physical_times[lead] <= 0.0) ++lead;

    std::vector<double> targets(physical_times.begin() + lead, physical_times.end());
    if (!targets.empty()) {
        std::vector<Vertex> filled(targets.size(), start);
        TimeChangeObserver obs{&exploration, &targets, &filled, 0, Kahan{}};
        PathEnd end = run_path(exploration, start, std::numeric_limits<double>::infinity(), rng, obs,
                               event_ceiling);
        res.events = end.events;
        res.censored = end.censored && obs.next < targets.size();
        for (std::size_t i = 0; i < targets.size(); ++i) res.states[lead + i] = filled[i];
    }
    return res;
}

namespace {

struct HittingObserver {
    const VertexSet* target;
    double hit_time = 0.0;
    Vertex hit_state = 0;
    bool hit = false;

    bool arrive(Vertex x, double t) {
        if (target->contains(x)) {
            hit = true;
            hit_time = t;
            hit_state = x;
            return false;
        }
        return true;
    }
    bool segment(Vertex, double, double, bool) { return true; }
};

} // namespace

HittingResult hitting_time(const RateModel& model, Vertex start, const VertexSet& target, RngStream& rng,
                           std::uint64_t event_ceiling) {
    if (target.empty()) throw std::domain_error("hitting_time: target set is empty");
    HittingObserver obs{&target};
    PathEnd end = run_path(model, start, std::numeric_limits<double>::infinity(), rng, obs, event_ceiling);
    HittingResult r;
    if (obs.hit) {
        r.time = obs.hit_time;
        r.where = obs.hit_state;
    } else {
        r.time = end.t;
        r.where = end.state;
        r.censored = true;
    }
    return r;
}

CorrelationEstimate correlation(const Environment& env, const ScaleSet& scales, double t, double s,
                                std::size_t replicas, const SeedLedger& ledger, InitialLaw init,
                                std::uint64_t event_ceiling, unsigned threads) {
    if (!(t >= 0.0 && s >= 0.0)) throw std::domain_error("correlation: t,s must be >= 0");
    RateModel model = RateModel::exploration(env, 1.0 / scales.r_star);
    if (env.n() <= 18) model.build_tables();
    StationaryMeasure pi(env, scales.r_star);
    if (init == InitialLaw::kStationary) pi.build_sampler();

    std::vector<double> targets{scales.c_n * t, scales.c_n * (t + s)};
    auto chunks = map_replica_chunks<std::vector<std::int8_t>>(
        replicas, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<std::int8_t> out;
            out.reserve(hi - lo);
            for (std::size_t r = lo; r < hi; ++r) {
                RngStream rng = ledger.stream("correlation", r);
                Vertex start = (init == InitialLaw::kUniform)
                                   ? static_cast<Vertex>(rng.next_below(env.size()))
                                   : pi.sample(rng);
                TimeChangeResult tc = time_change_evaluate(model, start, targets, rng, event_ceiling);
                if (tc.censored)
                    out.push_back(-1);
                else
                    out.push_back(tc.states[0] == tc.states[1] ? 1 : 0);
            }
            return out;
        });

    CorrelationEstimate ce;
    std::size_t hits = 0;
    for (const auto& c : chunks)
        for (std::int8_t o : c) {
            ce.outcomes.push_back(o);
            if (o < 0)
                ++ce.censored;
            else {
                ++ce.replicas_done;
                hits += o;
            }
        }
    WilsonCI ci = wilson_interval(hits, ce.replicas_done);
    ce.estimate = ci.estimate;
    ce.ci_lo = ci.lo;
    ce.ci_hi = ci.hi;
    return ce;
}

} // namespace remlab
