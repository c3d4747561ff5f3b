#include "remlab/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_set>

namespace remlab {

namespace {
constexpr unsigned kScanCap = 26;

void check_scan_capacity(const Environment& env) {
    if (env.n() > kScanCap) throw std::domain_error("landscape: exhaustive scan limited to n <= 26");
}
} // namespace

LevelSetDecomposition level_set(const Environment& env, double threshold) {
    if (!(threshold > 0.0)) throw std::domain_error("level_set: threshold must be > 0");
    check_scan_capacity(env);
    const unsigned n = env.n();
    const std::size_t m = env.size();

    LevelSetDecomposition d;
    d.threshold = threshold;
    d.member_mask.assign((m + 63) / 64, 0);
    for (std::size_t x = 0; x < m; ++x) {
        if (env.tau(static_cast<Vertex>(x)) >= threshold) {
            d.members.push_back(static_cast<Vertex>(x));
            d.member_mask[x >> 6] |= std::uint64_t(1) << (x & 63);
        }
    }

    d.component_of.assign(m, -1);
    std::deque<Vertex> queue;
    for (Vertex root : d.members) {
        if (d.component_of[root] >= 0) continue;
        std::int32_t id = static_cast<std::int32_t>(d.components.size());
        std::vector<Vertex> comp;
        d.component_of[root] = id;
        queue.push_back(root);
        while (!queue.empty()) {
            Vertex x = queue.front();
            queue.pop_front();
            comp.push_back(x);
            for (unsigned b = 0; b < n; ++b) {
                Vertex y = flip_bit(x, b);
                if (d.contains(y) && d.component_of[y] < 0) {
                    d.component_of[y] = id;
                    queue.push_back(y);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        d.components.push_back(std::move(comp));
    }
    return d;
}

std::vector<Vertex> hills(const Environment& env, double r_star) {
    check_scan_capacity(env);
    std::vector<Vertex> out;
    double cutoff = 1.0 / r_star;
    for (std::size_t x = 0; x < env.size(); ++x)
        if (env.tau(static_cast<Vertex>(x)) <= cutoff) out.push_back(static_cast<Vertex>(x));
    return out;
}

std::vector<Vertex> immersion(const std::vector<Vertex>& a, const LevelSetDecomposition& v_star) {
    std::unordered_set<std::int32_t> comps;
    for (Vertex x : a) {
        if (!v_star.contains(x)) throw std::domain_error("immersion: set not contained in the level set");
        comps.insert(v_star.component_of[x]);
    }
    std::vector<Vertex> out;
    for (std::int32_t id : comps)
        out.insert(out.end(), v_star.components[id].begin(), v_star.components[id].end());
    std::sort(out.begin(), out.end());
    return out;
}

TopSets top_sets(const Environment& env, const ScaleSet& scales, const LevelSetDecomposition& v_star,
                 TopThresholdMode mode, bool require_valid_regime) {
    check_scan_capacity(env);
    if (require_valid_regime && !scales.regime_valid)
        throw std::domain_error("top_sets: scale set outside the valid regime (eps_n <= rho_n*)");

    TopSets t;
    t.top_thr = top_threshold(scales, mode, &t.threshold_fell_back);

    const unsigned n = env.n();
    const std::size_t m = env.size();
    const double r_star = scales.r_star;
    const double inv_r_star = 1.0 / r_star;

    std::vector<std::uint64_t> top_mask((m + 63) / 64, 0);
    for (std::size_t x = 0; x < m; ++x) {
        if (env.tau(static_cast<Vertex>(x)) >= t.top_thr) {
            t.t_n.push_back(static_cast<Vertex>(x));
            top_mask[x >> 6] |= std::uint64_t(1) << (x & 63);
        }
    }
    auto in_top = [&](Vertex y) { return (top_mask[y >> 6] >> (y & 63)) & 1u; };

    // Count T_n points per V*-component so "alone in the valley" is O(1).
    std::vector<std::uint32_t> top_per_component(v_star.components.size(), 0);
    for (Vertex x : t.t_n)
        if (v_star.contains(x)) ++top_per_component[v_star.component_of[x]];

    for (Vertex x : t.t_n) {
        bool neighbor_in_top = false;
        bool isolated = true;  // all neighbors strictly between 1/r* and r*
        for (unsigned b = 0; b < n; ++b) {
            Vertex y = flip_bit(x, b);
            double ty = env.tau(y);
            if (in_top(y)) neighbor_in_top = true;
            if (!(ty > inv_r_star && ty < r_star)) isolated = false;
        }
        bool alone = !neighbor_in_top;
        if (alone && v_star.contains(x))
            alone = top_per_component[v_star.component_of[x]] == 1;
        if (alone) t.t_circ.push_back(x);
        if (isolated) t.i_star.push_back(x);
    }

    // Local minima of the Hamiltonian over the whole cube; exact tau ties
    // (probability zero under continuous generation) break by vertex index.
    for (std::size_t x = 0; x < m; ++x) {
        double tx = env.tau(static_cast<Vertex>(x));
        bool is_min = true;
        for (unsigned b = 0; b < n; ++b) {
            Vertex y = flip_bit(static_cast<Vertex>(x), b);
            double ty = env.tau(y);
            if (ty == tx) ++t.tau_tie_count;
            if (ty > tx || (ty == tx && y < static_cast<Vertex>(x))) is_min = false;
        }
        if (is_min) t.m_n.push_back(static_cast<Vertex>(x));
    }

    // Immersion of T_n in V*: only defined vertex-wise for the part inside V*.
    std::vector<Vertex> inside;
    for (Vertex x : t.t_n)
        if (v_star.contains(x)) inside.push_back(x);
    t.t_star = immersion(inside, v_star);
    return t;
}

LandscapeSizeReport lemma21_report(const Environment& env, const ScaleSet& scales,
                                   const LevelSetDecomposition& v_star, const TopSets& tops) {
    LandscapeSizeReport r;
    const unsigned n = env.n();
    r.v_star = v_star.members.size();
    r.v_bar = hills(env, scales.r_star).size();
    r.t_n = tops.t_n.size();
    r.t_circ = tops.t_circ.size();
    r.t_minus = r.t_n - r.t_circ;
    r.i_star = tops.i_star.size();
    r.t_circ_minus_i = r.t_circ - r.i_star;
    for (const auto& c : v_star.components) r.max_component = std::max(r.max_component, c.size());

    std::unordered_set<Vertex> hill_set;
    for (Vertex x : hills(env, scales.r_star)) hill_set.insert(x);
    for (Vertex x : tops.m_n)
        if (hill_set.count(x)) ++r.v_bar_cap_m;

    double two_n = std::pow(2.0, double(n));
    r.pred_v_star = two_n * std::pow(double(n), -scales.c_star);
    double eps_n = scales.epsilon_n;
    r.pred_t = std::pow(2.0, n * (1.0 - eps_n));
    r.bound_t_minus = std::pow(double(n), 4.0) * std::pow(2.0, n * (1.0 - 2.0 * eps_n));
    double corr = 2.0 * std::pow(double(n), 1.0 - scales.c_star);
    r.pred_i_star = r.pred_t * std::max(0.0, 1.0 - corr);
    r.pred_t_circ_minus_i = r.pred_t * corr;
    r.bound_max_component = 1.0 / (scales.rho_star * (1.0 - 2.0 / scales.c_star));

    r.ratio_v_star = r.v_star / r.pred_v_star;
    r.ratio_t = r.t_n / r.pred_t;
    r.ratio_t_circ = r.t_circ / r.pred_t;
    r.ratio_i_star = (r.pred_i_star > 0) ? r.i_star / r.pred_i_star : 0.0;
    return r;
}

double conductance(const RateModel& exploration, const StationaryMeasure& pi,
                   const std::vector<Vertex>& c, const std::vector<Vertex>& c_tilde) {
    std::unordered_set<Vertex> target(c_tilde.begin(), c_tilde.end());
    for (Vertex x : c)
        if (target.count(x)) throw std::domain_error("conductance: sets must be disjoint");
    const unsigned n = exploration.n();
    double q = 0.0;
    for (Vertex x : c)
        for (unsigned b = 0; b < n; ++b) {
            Vertex y = flip_bit(x, b);
            if (target.count(y)) q += pi.pi(x) * exploration.rate(x, b);
        }
    return q;
}

} // namespace remlab
