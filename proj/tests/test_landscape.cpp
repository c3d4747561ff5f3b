#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "remlab/landscape.hpp"
#include "remlab/stats.hpp"

using namespace remlab;

namespace {

// Disjoint-set oracle for the component structure.
struct Dsu {
    std::vector<int> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

ScaleSet valid_scales(unsigned n, double eps = 0.85, double beta_mult = 4.0, double c_star = 2.5,
                      double theta = 4.0) {
    double beta = beta_mult * std::sqrt(eps * 2.0 * std::log(2.0));
    return make_scales(n, beta, eps, c_star, theta);
}

} // namespace

TEST_CASE("level set: empty above the maximum") {
    Environment env(10, 1.0, 3, true);
    double max_tau = 0.0;
    for (std::size_t x = 0; x < env.size(); ++x) max_tau = std::max(max_tau, env.tau(Vertex(x)));
    auto d = level_set(env, max_tau * 2.0);
    CHECK(d.members.empty());
    CHECK(d.components.empty());
}

TEST_CASE("level set membership is the exact predicate") {
    Environment env(10, 1.0, 3, true);
    auto d = level_set(env, 1.5);
    std::size_t count = 0;
    for (std::size_t x = 0; x < env.size(); ++x) {
        bool in = env.tau(Vertex(x)) >= 1.5;
        CHECK(d.contains(Vertex(x)) == in);
        count += in;
    }
    CHECK(d.members.size() == count);
}

TEST_CASE("pairwise-distant members are singleton components") {
    // high threshold: members are sparse, most are isolated
    Environment env(12, 1.5, 11, true);
    std::vector<double> taus;
    for (std::size_t x = 0; x < env.size(); ++x) taus.push_back(env.tau(Vertex(x)));
    std::sort(taus.begin(), taus.end());
    double thr = taus[taus.size() - 6];  // six members
    auto d = level_set(env, thr);
    bool any_adjacent = false;
    for (Vertex a : d.members)
        for (Vertex b : d.members)
            if (a != b && std::popcount(a ^ b) == 1) any_adjacent = true;
    if (!any_adjacent) CHECK(d.components.size() == d.members.size());
}

TEST_CASE("components agree with a union-find oracle") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Environment env(12, 1.0, seed, true);
        auto d = level_set(env, 0.8);  // sizeable set with real components
        Dsu dsu(env.size());
        for (Vertex x : d.members)
            for (unsigned b = 0; b < 12; ++b) {
                Vertex y = flip_bit(x, b);
                if (d.contains(y)) dsu.unite(x, y);
            }
        // identical partitions: same component id iff same DSU root
        for (Vertex x : d.members)
            for (unsigned b = 0; b < 12; ++b) {
                Vertex y = flip_bit(x, b);
                if (!d.contains(y)) continue;
                CHECK((d.component_of[x] == d.component_of[y]) == (dsu.find(x) == dsu.find(y)));
            }
        // maximality: no edge joins two distinct classes
        for (Vertex x : d.members)
            for (unsigned b = 0; b < 12; ++b) {
                Vertex y = flip_bit(x, b);
                if (d.contains(y)) CHECK(d.component_of[x] == d.component_of[y]);
            }
        // coverage and disjointness
        std::size_t total = 0;
        for (const auto& comp : d.components) total += comp.size();
        CHECK(total == d.members.size());
    }
}

TEST_CASE("hills are disjoint from valleys and match their size law") {
    ScaleSet s = valid_scales(14, 0.85, 4.0, 2.5, 4.0);
    std::vector<double> hill_sizes, valley_sizes, hill_comps, valley_comps;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Environment env(14, s.beta, seed, true);
        auto v = level_set(env, s.r_star);
        auto h = hills(env, s.r_star);
        for (Vertex x : h) CHECK_FALSE(v.contains(x));
        hill_sizes.push_back(double(h.size()));
        valley_sizes.push_back(double(v.members.size()));
        // component count of the hill set via DSU
        Dsu dsu(env.size());
        std::vector<std::uint64_t> mask(env.size() / 64 + 1, 0);
        for (Vertex x : h) mask[x >> 6] |= 1ull << (x & 63);
        auto in = [&](Vertex y) { return (mask[y >> 6] >> (y & 63)) & 1u; };
        for (Vertex x : h)
            for (unsigned b = 0; b < 14; ++b) {
                Vertex y = flip_bit(x, b);
                if (in(y)) dsu.unite(x, y);
            }
        std::vector<int> roots;
        for (Vertex x : h) roots.push_back(dsu.find(x));
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
        hill_comps.push_back(double(roots.size()));
        valley_comps.push_back(double(v.components.size()));
    }
    // expected size 2^n n^{-c*}
    double expected = std::pow(2.0, 14) * std::pow(14.0, -2.5);
    MeanSE hill_stat = mean_se(hill_sizes);
    MeanSE valley_stat = mean_se(valley_sizes);
    CHECK(std::fabs(hill_stat.mean - expected) <= 3.0 * hill_stat.se + 1e-9);
    CHECK(std::fabs(valley_stat.mean - expected) <= 3.0 * valley_stat.se + 1e-9);
    // two-sample KS compatibility of component counts at level 0.01
    double crit = 1.628 * std::sqrt(2.0 / 30.0);
    CHECK(ks_two_sample(hill_comps, valley_comps) <= crit);
}

TEST_CASE("immersion: idempotence, empty set, closure") {
    Environment env(12, 1.0, 5, true);
    auto v = level_set(env, 0.9);
    REQUIRE(!v.components.empty());
    std::vector<Vertex> one_comp = v.components[0];
    CHECK(immersion(one_comp, v) == one_comp);
    CHECK(immersion({}, v).empty());
    std::vector<Vertex> a{v.components[0][0]};
    auto im = immersion(a, v);
    CHECK(immersion(im, v) == im);
    std::vector<Vertex> outside{static_cast<Vertex>(0)};
    if (!v.contains(0)) CHECK_THROWS_AS((void)immersion(outside, v), std::domain_error);
}

TEST_CASE("top sets on an isolated-singleton instance") {
    // scan seeds for an environment whose top is a single isolated vertex
    ScaleSet s = valid_scales(12, 0.95, 4.0, 2.5, 2.0);
    REQUIRE(s.regime_valid);
    bool found = false;
    for (std::uint64_t seed = 1; seed <= 200 && !found; ++seed) {
        Environment env(12, s.beta, seed, true);
        auto v = level_set(env, s.r_star);
        TopSets tops = top_sets(env, s, v);
        if (tops.t_n.size() != 1) continue;
        Vertex x = tops.t_n[0];
        bool isolated = true;
        for (unsigned b = 0; b < 12; ++b)
            if (env.tau(flip_bit(x, b)) >= tops.top_thr) isolated = false;
        if (!isolated) continue;
        found = true;
        CHECK(tops.t_circ == tops.t_n);
    }
    CHECK(found);
}

TEST_CASE("local minima count matches the exchangeability oracle") {
    // each vertex is the strict maximizer of tau among its n+1 local values
    // with probability 1/(n+1), so E|M| = 2^n/(n+1)
    ScaleSet s = valid_scales(16);
    std::vector<double> counts;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Environment env(16, s.beta, seed, true);
        auto v = level_set(env, s.r_star);
        TopSets tops = top_sets(env, s, v, TopThresholdMode::kAuto, false);
        counts.push_back(double(tops.m_n.size()));
    }
    MeanSE st = mean_se(counts);
    double expected = std::pow(2.0, 16) / 17.0;
    CHECK(std::fabs(st.mean - expected) <= 3.0 * st.se);
}

TEST_CASE("inclusion chain and top-in-minima containment hold exactly") {
    ScaleSet s = valid_scales(12, 0.95, 6.0, 2.5, 2.0);
    REQUIRE(s.regime_valid);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Environment env(12, s.beta, seed, true);
        auto v = level_set(env, s.r_star);
        TopSets tops = top_sets(env, s, v);
        auto contains = [](const std::vector<Vertex>& set, Vertex x) {
            return std::binary_search(set.begin(), set.end(), x);
        };
        for (Vertex x : tops.i_star) CHECK(contains(tops.t_circ, x));
        for (Vertex x : tops.t_circ) {
            CHECK(contains(tops.t_n, x));
            CHECK(contains(tops.m_n, x));
        }
        for (Vertex x : tops.t_n) CHECK(v.contains(x));
        // isolated tops are two steps away from both valleys and hills
        auto hill = hills(env, s.r_star);
        for (Vertex x : tops.i_star)
            for (unsigned b = 0; b < 12; ++b) {
                Vertex y = flip_bit(x, b);
                CHECK_FALSE(v.contains(y));
                CHECK_FALSE(std::binary_search(hill.begin(), hill.end(), y));
            }
    }
}

TEST_CASE("size statistics against the lemma bounds") {
    ScaleSet s = valid_scales(16);
    REQUIRE(s.regime_valid);
    int bad_minima = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Environment env(16, s.beta, seed, true);
        auto v = level_set(env, s.r_star);
        TopSets tops = top_sets(env, s, v);
        LandscapeSizeReport rep = lemma21_report(env, s, v, tops);
        if (rep.v_bar_cap_m != 0) ++bad_minima;
        CHECK(double(rep.max_component) <= 2.0 * rep.bound_max_component);
        CHECK(double(rep.t_minus) <= 2.0 * rep.bound_t_minus + 2.0);
    }
    CHECK(bad_minima == 0);
}

TEST_CASE("top size ratio concentrates as n grows") {
    double dev_small = 0.0, dev_large = 0.0;
    const int seeds = 20;
    for (unsigned n : {12u, 16u}) {
        ScaleSet s = valid_scales(n);
        double acc = 0.0;
        for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
            Environment env(n, s.beta, seed, true);
            auto v = level_set(env, s.r_star);
            TopSets tops = top_sets(env, s, v, TopThresholdMode::kAuto, false);
            double ratio = double(tops.t_n.size()) / std::pow(2.0, n * (1.0 - s.epsilon_n));
            acc += std::fabs(ratio - 1.0);
        }
        (n == 12 ? dev_small : dev_large) = acc / seeds;
    }
    CHECK(dev_large < dev_small);
}

TEST_CASE("conductance: zero without edges, symmetric, single-vertex oracle") {
    Environment env(8, 1.0, 21, true);
    ScaleSet s = valid_scales(8);
    RateModel model = RateModel::exploration(env, 1.0 / s.r_star);
    StationaryMeasure pi(env, s.r_star);

    // far-apart singletons: no edges
    CHECK(conductance(model, pi, {0}, {255}) == 0.0);

    // symmetry by reversibility
    std::vector<Vertex> c{0, 1, 2}, ct{4, 5, 12};
    double q1 = conductance(model, pi, c, ct);
    double q2 = conductance(model, pi, ct, c);
    CHECK(q1 == doctest::Approx(q2).epsilon(1e-12));

    // single vertex against the complement: direct summation oracle
    Vertex x = 37;
    std::vector<Vertex> rest;
    for (std::size_t y = 0; y < env.size(); ++y)
        if (y != x) rest.push_back(Vertex(y));
    double q = conductance(model, pi, {x}, rest);
    double expect = 0.0;
    for (unsigned b = 0; b < 8; ++b) expect += pi.pi(x) * model.rate(x, b);
    CHECK(q == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS((void)conductance(model, pi, {1, 2}, {2, 3}), std::domain_error);
}
