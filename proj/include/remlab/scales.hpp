#ifndef REMLAB_SCALES_HPP
#define REMLAB_SCALES_HPP

#include <cmath>
#include <limits>
#include <string>

namespace remlab {

// Query for the level threshold r_n(rho): the unique r > 0 with
// 2^{rho n} * P(tau >= r) = 1, i.e. Phibar(ln r / (beta sqrt n)) = 2^{-rho n}.
struct ThresholdQuery {
    double rho;
    unsigned n;
    double beta;
};

// Exact solve of the defining tail identity. Residual |2^{rho n} Phibar - 1|
// is driven below 1e-9 (Newton in z-space on the log identity); a residual
// check failure or an unrepresentable tail raises.
double solve_threshold(const ThresholdQuery& q);

enum class TopThresholdMode {
    kLevelEpsN,   // canonical: r_n(eps_n), needs eps_n > 0
    kCnOverN2Th,  // c_n / (n^2 theta), defined for every theta
    kRefined,     // c_n * exp{-L [1 + L/(2 n beta beta_c)]}, L = ln(n^2 theta)
    kAuto,        // canonical when eps_n > 0, else kCnOverN2Th (flagged)
};

// All deterministic sequences for fixed (n, beta, epsilon, c_star, theta).
struct ScaleSet {
    // inputs
    unsigned n = 0;
    double beta = 0.0;
    double epsilon = 0.0;
    double c_star = 0.0;
    double theta = 0.0;

    // derived
    double beta_c = 0.0;       // sqrt(epsilon * 2 ln 2)
    double alpha = 0.0;        // beta_c / beta
    double c_n = 0.0;          // time scale, exact solve at rho = epsilon
    double alpha_n = 0.0;      // ln(c_n) / (n beta^2)
    double rho_star = 0.0;     // c_star ln n / (n ln 2)
    double r_star = 0.0;       // exact solve at rho = rho_star
    double delta_n = 0.0;      // (1/(n beta)) sqrt(2 eps / ln 2) ln(n^2 theta)
    double epsilon_n = 0.0;    // epsilon - delta_n (may be <= 0 at small n)
    double r_eps_n = std::numeric_limits<double>::quiet_NaN();  // r_n(eps_n) when eps_n > 0
    double kappa_n = 0.0;      // floor(n^4 r_star)
    double kappa_tilde = 0.0;  // (5/2) n^2 r_star
    double nu_bar = 0.0;       // (1/n) exp(beta n sqrt(ln 2) (1 + 2 ln n / (n ln 2)))

    // filled in once b_n has been estimated
    double b_n = std::numeric_limits<double>::quiet_NaN();
    double a_n = std::numeric_limits<double>::quiet_NaN();  // 2^{eps n} / b_n

    bool aging_regime = false;  // beta > beta_c, i.e. alpha in (0,1)
    bool regime_valid = false;  // epsilon_n > rho_star

    double two_pow_eps_n() const { return std::exp2(epsilon * n); }

    // block count k_n(t) = floor(a_n t / theta); requires b_n to be set.
    double k_n(double t) const { return std::floor(a_n * t / theta); }
};

ScaleSet make_scales(unsigned n, double beta, double epsilon, double c_star, double theta);

// Records the externally estimated b_n and fills a_n = 2^{eps n} / b_n.
void set_b_n(ScaleSet& s, double b_n);

// Top-set threshold under the chosen mode. kAuto falls back to the
// c_n/(n^2 theta) form when eps_n <= 0 and reports that through *fell_back.
double top_threshold(const ScaleSet& s, TopThresholdMode mode = TopThresholdMode::kAuto,
                     bool* fell_back = nullptr);

// F_{beta,eps,n}(x); F(0) := 0 by continuous extension, hard error at or past
// the pole ln x = n beta beta_c.
double f_function(const ScaleSet& s, double x);
// dF/dx, used by the exact local-time quadratures.
double f_derivative(const ScaleSet& s, double x);

// Closed-form asymptotics with the o(1) terms set to zero, as diagnostics
// against the exact solves (which stay canonical).
struct AsymptoticsReport {
    double c_n_closed_form = 0.0;
    double c_n_rel_dev = 0.0;
    double r_star_closed_form = 0.0;
    double r_star_rel_dev = 0.0;
    double ratio_exact = 0.0;       // r_n(eps_n) / r_n(eps), exact solves
    double ratio_closed_form = 0.0; // exp{-L (1 + L / (2 n beta beta_c))}
    double ratio_rel_dev = 0.0;
    bool ratio_defined = false;     // needs eps_n > 0
};
AsymptoticsReport asymptotic_formulas(const ScaleSet& s);

// closed form of r_n(rho) with o(.) terms zeroed (diagnostic helper)
double threshold_closed_form(double rho, unsigned n, double beta);

// Pass/fail report for the block-length gates. "Much smaller" gates are
// ratio thresholds (default 0.1), never silent.
struct ThetaReport {
    double log_theta = 0.0;
    double lower_bound_log = 0.0;  // (4/(1-alpha)) ln r_star
    bool lower_bound_defined = false;
    bool pass_lower = false;       // ln theta > lower bound
    bool pass_kappa = false;       // theta >= kappa_n
    double ll_ratio = 0.0;         // ln theta / n
    bool pass_ll = false;          // ll_ratio <= tol
    double r4_ratio = 0.0;         // (r_star)^4 / theta^{1-alpha}
    bool pass_r4 = false;          // r4_ratio <= tol
    bool window_empty = false;     // lower bound already >= n * tol: no admissible theta at this n
    double tol = 0.1;
};
ThetaReport theta_validation(const ScaleSet& s, double tol = 0.1);

} // namespace remlab

#endif
