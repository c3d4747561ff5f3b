#ifndef REMLAB_LANDSCAPE_HPP
#define REMLAB_LANDSCAPE_HPP

#include <cstdint>
#include <vector>

#include "remlab/environment.hpp"
#include "remlab/rates.hpp"
#include "remlab/scales.hpp"

namespace remlab {

// Level set {tau >= threshold} with its connected components in the induced
// subgraph of the n-cube. Component ids are assigned by smallest member.
struct LevelSetDecomposition {
    double threshold = 0.0;
    std::vector<Vertex> members;                   // ascending
    std::vector<std::vector<Vertex>> components;   // each ascending, id order = smallest member
    std::vector<std::int32_t> component_of;        // 2^n entries, -1 for non-members
    std::vector<std::uint64_t> member_mask;        // bitset over 2^n

    bool contains(Vertex x) const { return (member_mask[x >> 6] >> (x & 63)) & 1u; }
};

LevelSetDecomposition level_set(const Environment& env, double threshold);

// Hills: {x : tau(x) <= 1/r_star}.
std::vector<Vertex> hills(const Environment& env, double r_star);

// Union of the components of v_star that meet `a`; errors if a is not a
// subset of the members.
std::vector<Vertex> immersion(const std::vector<Vertex>& a, const LevelSetDecomposition& v_star);

struct TopSets {
    double top_thr = 0.0;          // threshold defining T_n
    bool threshold_fell_back = false;
    std::vector<Vertex> t_n;       // level set at top_thr
    std::vector<Vertex> t_star;    // immersion of T_n in V_n^*
    std::vector<Vertex> t_circ;    // members of T_n alone in their valley
    std::vector<Vertex> i_star;    // isolated from valleys and hills
    std::vector<Vertex> m_n;       // local minima of the Hamiltonian
    std::size_t tau_tie_count = 0; // floating collisions broken by vertex index
};

TopSets top_sets(const Environment& env, const ScaleSet& scales,
                 const LevelSetDecomposition& v_star,
                 TopThresholdMode mode = TopThresholdMode::kAuto,
                 bool require_valid_regime = true);

// Observed sizes against the leading-order predictions.
struct LandscapeSizeReport {
    std::size_t v_star = 0, v_bar = 0, t_n = 0, t_circ = 0, t_minus = 0, i_star = 0, t_circ_minus_i = 0;
    std::size_t max_component = 0;
    std::size_t v_bar_cap_m = 0;
    double pred_v_star = 0.0;        // 2^n n^{-c*}
    double pred_t = 0.0;             // 2^{n(1-eps_n)}
    double bound_t_minus = 0.0;      // n^4 2^{n(1-2 eps_n)}
    double pred_i_star = 0.0;        // 2^{n(1-eps_n)} (1 - 2 n^{1-c*})
    double pred_t_circ_minus_i = 0.0;
    double bound_max_component = 0.0; // 1/(rho* (1 - 2/c*))
    double ratio_v_star = 0.0, ratio_t = 0.0, ratio_t_circ = 0.0, ratio_i_star = 0.0;
};

LandscapeSizeReport lemma21_report(const Environment& env, const ScaleSet& scales,
                                   const LevelSetDecomposition& v_star, const TopSets& tops);

// q(C, C~) = sum_{x in C} sum_{y in C~} pi(x) lambda~(x,y); sets must be disjoint.
double conductance(const RateModel& exploration, const StationaryMeasure& pi,
                   const std::vector<Vertex>& c, const std::vector<Vertex>& c_tilde);

} // namespace remlab

#endif
