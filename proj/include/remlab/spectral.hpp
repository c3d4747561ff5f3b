#ifndef REMLAB_SPECTRAL_HPP
#define REMLAB_SPECTRAL_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "remlab/environment.hpp"
#include "remlab/landscape.hpp"
#include "remlab/rates.hpp"
#include "remlab/scales.hpp"

namespace remlab {

// Assembled exploration-chain generator: off-diagonal rates lambda~(x,y) over
// the cube edges, diagonal -lambda~(x), stationary weights, and the
// uniformization constant Theta >= every total rate.
struct Generator {
    unsigned n = 0;
    double eta = 0.0;
    double theta_unif = 0.0;       // max(nu_bar when available, exact max total rate)
    double max_total_rate = 0.0;
    std::vector<double> rates;     // rates[x*n + b] = lambda~(x, flip(x,b))
    std::vector<double> total;     // lambda~(x)
    std::vector<double> pi;        // stationary probabilities (sum 1)

    std::size_t size() const { return total.size(); }
    double rate(Vertex x, unsigned b) const { return rates[std::size_t(x) * n + b]; }
};

constexpr unsigned kSparseCap = 20;
constexpr unsigned kDenseCap = 13;

Generator build_generator(const Environment& env, const ScaleSet& scales);
// Test path with explicit eta (flat environments, toy cases); Theta = max rate.
Generator build_generator_eta(const Environment& env, double eta);

struct GapResult {
    double gap = 0.0;              // second-smallest eigenvalue of -L~
    double zero_residual = 0.0;    // |smallest| as a multiple of Theta
    unsigned iterations = 0;
    bool converged = false;
};

// Two smallest eigenvalues of the symmetrized negative generator, by Cholesky
// inverse subspace iteration with the known null vector deflated.
GapResult spectral_gap(const Generator& gen, double rel_tol = 1e-8);

// All eigenvalues of the nonsymmetric generator (cross-method oracle; tiny n only).
std::vector<double> spectral_gap_nonsymmetric(const Generator& gen);

// ---------------------------------------------------------------------------
// Canonical paths

struct PathRecord {
    std::uint8_t rule = 0;        // 1 or 2
    std::uint8_t start_coord = 0; // chosen cyclic start (leg 1)
    std::uint8_t leg2_coord = 0;  // cyclic start of leg 2 (rule 2)
    bool via_waypoint = false;
    bool good = false;
    Vertex waypoint = 0;
};

struct PathFamily {
    unsigned n = 0;
    std::vector<PathRecord> records;  // canonical unordered-pair order: x asc, y > x asc
    std::size_t good_count = 0;
    std::size_t pair_count = 0;
    bool fully_good = false;
};

// Reconstructs the cyclic path from x to y starting at coordinate c: flips the
// disagreeing coordinates in cyclic order c, c+1, ..., n-1, 0, ...
std::vector<Vertex> cyclic_path(Vertex x, Vertex y, unsigned c, unsigned n);

PathFamily canonical_paths(const Environment& env, double r_star);

// Streaming goodness statistics (no storage); usable at n = 14.
struct GoodnessStats {
    std::size_t pair_count = 0;
    std::size_t good_count = 0;
    bool fully_good = false;
};
GoodnessStats path_goodness_stats(const Environment& env, double r_star);

struct PoincareResult {
    double bound = 0.0;       // upper bound on 1/theta_1
    Vertex argmax_edge_x = 0; // smaller endpoint of the congested edge
    unsigned argmax_edge_bit = 0;
};
PoincareResult poincare_bound(const Generator& gen, const PathFamily& paths);

// ---------------------------------------------------------------------------
// Mixing

struct MixingResult {
    double max_rel_deviation = 0.0;  // max over x,y of |P_x(Y(t)=y)-pi(y)|/pi(y)
    double max_tv = 0.0;             // max over x of total variation distance
    double tv_bound = 0.0;           // Eq.-style bound from the exact gap
};
// Dense spectral route (any t); capacity-limited.
MixingResult mixing_check(const Generator& gen, double t, double exact_gap);

// Uniformized-series transition row (small Theta*t only; cross-check oracle).
std::vector<double> transition_row_series(const Generator& gen, Vertex x, double t,
                                          double tail_tol = 1e-12, double k_budget = 2e7);

// ---------------------------------------------------------------------------
// Hitting densities via the uniformization series

struct HittingDensityOptions {
    double poisson_tail = 1e-12;
    double k_budget = 2e7;  // error out past this many series terms
    bool per_arrival_state = false;
};

struct HittingDensity {
    std::vector<double> t_grid;
    std::vector<double> density;   // h(t) on the grid
    std::vector<double> cdf;       // P(H <= t), includes the t=0 atom for pi starts
    double atom_at_zero = 0.0;     // pi(A) when started from pi
    std::vector<Vertex> arrival_states;
    std::vector<std::vector<double>> arrival_density;  // [arrival][t]
    double absorbed_mass = 0.0;    // series mass within budget
    double mean_from_series = 0.0; // sum_k s_k (k+1)/Theta (conditional on absorption in budget)
};

HittingDensity hitting_density(const Generator& gen, const std::vector<Vertex>& target,
                               std::optional<Vertex> start,  // nullopt: start from pi
                               const std::vector<double>& t_grid, const HittingDensityOptions& opt = {});

// Exact mean hitting time from pi by a conjugate-gradient linear solve.
double mean_hitting_time_exact(const Generator& gen, const std::vector<Vertex>& target);
// Exact survival P_pi(H(A) > t) for arbitrary t via the killed-operator
// eigendecomposition (dense capacity).
struct KilledSpectrum {
    Eigen::VectorXd mu;       // eigenvalues of the killed -L~ (ascending)
    Eigen::VectorXd w;        // w_k = sum_x sqrt(pi(x)) u_k(x)
    double pi_target = 0.0;
    double survival(double t) const;
    double density(double t) const;
    double mean() const;
};
KilledSpectrum killed_spectrum(const Generator& gen, const std::vector<Vertex>& target);

// ---------------------------------------------------------------------------
// Local time law at a single vertex (exact, transform-based)

// Represents the law of l^x(s) for the chain started at x through the
// identity P_x(l^x(s) > l) = P(A(l) <= s - l), where A(l) is the total
// excursion (away) time accumulated while the local time reaches l: a compound
// Poisson subordinator with rate lambda~(x) and excursion-length jumps. The
// excursion Laplace transform is exact from the killed-at-x spectrum; the CDF
// of A(l) is recovered by Abate-Whitt Euler inversion, whose integrand is
// bounded by 1 on the Bromwich line for any jump intensity.
class LocalTimeLaw {
public:
    LocalTimeLaw(const Generator& gen, Vertex x);

    double lambda_x() const { return lambda_; }
    double excursion_mean() const;

    std::complex<double> excursion_laplace(std::complex<double> z) const;
    double excursion_cdf(double a) const;

    double away_cdf(double l, double a) const;          // P(A(l) <= a)
    double survival(double l, double s) const;          // P_x(l^x(s) > l)

    // E_x[phi(l^x(s))] for increasing phi with phi(0) = 0, given phi'.
    template <typename Phi, typename PhiPrime>
    double expectation(Phi phi, PhiPrime phi_prime, double s, int nodes = 160) const;

    double moment(double alpha, double s) const;         // E_x[l^x(s)^alpha]
    double expectation_f(const ScaleSet& scales, double s) const;  // E_x[F(l^x(s))]

    // pi-start hitting density of {x}: h(v) = sum_k h_k exp(-mu_k v), atom pi(x).
    double pi_hitting_density(double v) const;
    double pi_atom() const { return pi_atom_; }
    const Eigen::VectorXd& killed_mu() const { return mu_; }
    const Eigen::VectorXd& hitting_coefficients() const { return hit_c_; }

private:
    double lambda_ = 0.0;
    double pi_atom_ = 0.0;
    Eigen::VectorXd mu_;      // killed spectrum
    Eigen::VectorXd exc_c_;   // excursion density g(t) = sum exc_c_k exp(-mu_k t)
    Eigen::VectorXd hit_c_;   // pi-start hitting density coefficients
};

// ---------------------------------------------------------------------------
// Exact b_n / b_n-circle (first-passage decomposition composed with the local
// time law; dense capacity).

struct BnExact {
    double b_circ = 0.0;
    double b_n = 0.0;
    bool b_n_available = false;  // full-T computation capped at |T_n| <= 12
};

BnExact bn_exact(const Generator& gen, const Environment& env, const ScaleSet& scales,
                 const TopSets& tops, std::size_t full_t_cap = 12);

// ---------------------------------------------------------------------------
// Bound audit

struct BoundCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
    double slack = 0.0;  // measured ratio
};

struct BoundAudit {
    double mean_hitting = 0.0;        // exact, linear solve
    double mean_from_spectrum = 0.0;  // independent route
    std::vector<BoundCheck> checks;
};

// Audits the mean-hitting bounds, the survival lower bound on a grid, and the
// local-time moment bounds at probe vertices. Asymptotic (1+o(1)) inequalities
// are audited with the supplied slack.
BoundAudit bound_audit(const Generator& gen, const Environment& env, const ScaleSet& scales,
                       const std::vector<Vertex>& target, const std::vector<double>& t_grid,
                       const std::vector<Vertex>& probes, double asymptotic_slack = 2.0);

// ---------------------------------------------------------------------------

template <typename Phi, typename PhiPrime>
double LocalTimeLaw::expectation(Phi phi, PhiPrime phi_prime, double s, int nodes) const {
    if (!(s > 0.0)) return 0.0;
    // integral of phi'(l) P(l^x(s) > l) over (0, s], log substitution l = e^u.
    const double l0 = s * 1e-12;
    double acc = phi(l0) * away_cdf(l0, s - l0);
    const double u_lo = std::log(l0), u_hi = std::log(s);
    const int m = nodes;
    const double h = (u_hi - u_lo) / m;
    // composite Simpson in u (m even)
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
        double u = u_lo + h * i;
        double l = std::exp(u);
        if (l > s) l = s;
        double f = phi_prime(l) * l * away_cdf(l, s - l);
        double wgt = (i == 0 || i == m) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
        sum += wgt * f;
    }
    acc += sum * h / 3.0;
    return acc;
}

} // namespace remlab

#endif
