#include "remlab/scales.hpp"

#include <cmath>
#include <stdexcept>

#include "remlab/special.hpp"

namespace remlab {

namespace {
constexpr double kLn2 = 0.6931471805599453;

// Solve ln Phibar(z) = target_log by Newton, starting from the double-precision
// inverse CDF when the tail is representable.
double solve_z_for_log_tail(double target_log) {
    if (target_log > 0.0) throw std::domain_error("solve_threshold: tail probability > 1");
    if (target_log < -700.0)
        throw std::runtime_error("solve_threshold: required tail below representable range (rho*n too large)");
    double p = std::exp(target_log);
    double z = (p >= 1e-300) ? -norm_inv_cdf(p) : 37.0;
    for (int it = 0; it < 60; ++it) {
        double g = norm_log_sf(z) - target_log;
        // d/dz ln Phibar = -pdf/sf
        double dg = -std::exp(-0.5 * z * z - 0.5 * std::log(2.0 * M_PI) - norm_log_sf(z));
        double step = g / dg;
        z -= step;
        if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(z))) break;
    }
    return z;
}
} // namespace

double solve_threshold(const ThresholdQuery& q) {
    if (!(q.rho > 0.0)) throw std::domain_error("solve_threshold: rho must be > 0");
    if (!(q.beta > 0.0)) throw std::domain_error("solve_threshold: beta must be > 0");
    double target_log = -q.rho * q.n * kLn2;
    double z = solve_z_for_log_tail(target_log);
    double residual = std::fabs(std::expm1(norm_log_sf(z) - target_log));
    if (residual > 1e-9) throw std::runtime_error("solve_threshold: residual above 1e-9");
    double log_r = z * q.beta * std::sqrt(double(q.n));
    if (log_r > 709.0) throw std::runtime_error("solve_threshold: threshold overflows double range");
    return std::exp(log_r);
}

ScaleSet make_scales(unsigned n, double beta, double epsilon, double c_star, double theta) {
    if (n < 2) throw std::domain_error("ScaleSet: n must be >= 2");
    if (!(beta > 0.0)) throw std::domain_error("ScaleSet: beta must be > 0");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::domain_error("ScaleSet: epsilon must be in (0,1]");
    if (!(c_star > 1.0 + std::log(4.0))) throw std::domain_error("ScaleSet: c_star must exceed 1 + ln 4");
    if (!(theta > 0.0)) throw std::domain_error("ScaleSet: theta must be > 0");

    ScaleSet s;
    s.n = n;
    s.beta = beta;
    s.epsilon = epsilon;
    s.c_star = c_star;
    s.theta = theta;

    s.beta_c = std::sqrt(epsilon * 2.0 * kLn2);
    s.alpha = s.beta_c / beta;
    s.aging_regime = (s.alpha > 0.0 && s.alpha < 1.0);

    s.c_n = solve_threshold({epsilon, n, beta});
    s.alpha_n = std::log(s.c_n) / (n * beta * beta);

    s.rho_star = c_star * std::log(double(n)) / (n * kLn2);
    s.r_star = solve_threshold({s.rho_star, n, beta});

    s.delta_n = (1.0 / (n * beta)) * std::sqrt(2.0 * epsilon / kLn2) * std::log(double(n) * n * theta);
    s.epsilon_n = epsilon - s.delta_n;
    if (s.epsilon_n > 0.0) s.r_eps_n = solve_threshold({s.epsilon_n, n, beta});
    s.regime_valid = (s.epsilon_n > s.rho_star);

    double n4 = double(n) * n * n * n;
    s.kappa_n = std::floor(n4 * s.r_star);
    s.kappa_tilde = 2.5 * double(n) * n * s.r_star;
    double ln_n = std::log(double(n));
    s.nu_bar = std::exp(beta * n * std::sqrt(kLn2) * (1.0 + 2.0 * ln_n / (n * kLn2))) / n;
    return s;
}

void set_b_n(ScaleSet& s, double b_n) {
    if (!(b_n > 0.0)) throw std::domain_error("set_b_n: b_n must be positive");
    s.b_n = b_n;
    s.a_n = s.two_pow_eps_n() / b_n;
}

double top_threshold(const ScaleSet& s, TopThresholdMode mode, bool* fell_back) {
    if (fell_back) *fell_back = false;
    double L = std::log(double(s.n) * s.n * s.theta);
    switch (mode) {
        case TopThresholdMode::kLevelEpsN:
            if (!(s.epsilon_n > 0.0))
                throw std::domain_error("top_threshold: eps_n <= 0, canonical level undefined");
            return s.r_eps_n;
        case TopThresholdMode::kCnOverN2Th:
            return s.c_n / (double(s.n) * s.n * s.theta);
        case TopThresholdMode::kRefined:
            return s.c_n * std::exp(-L * (1.0 + L / (2.0 * s.n * s.beta * s.beta_c)));
        case TopThresholdMode::kAuto:
            if (s.epsilon_n > 0.0) return s.r_eps_n;
            if (fell_back) *fell_back = true;
            return s.c_n / (double(s.n) * s.n * s.theta);
    }
    throw std::logic_error("top_threshold: bad mode");
}

double f_function(const ScaleSet& s, double x) {
    if (x < 0.0) throw std::domain_error("f_function: x must be >= 0");
    if (x == 0.0) return 0.0;
    double lx = std::log(x);
    double pole = s.n * s.beta * s.beta_c;
    if (lx >= pole) throw std::domain_error("f_function: argument at or past the pole ln x = n beta beta_c");
    double log_f = (s.alpha_n - lx / (2.0 * s.n * s.beta * s.beta)) * lx - std::log1p(-lx / pole);
    return std::exp(log_f);
}

double f_derivative(const ScaleSet& s, double x) {
    if (!(x > 0.0)) throw std::domain_error("f_derivative: x must be > 0");
    double lx = std::log(x);
    double pole = s.n * s.beta * s.beta_c;
    if (lx >= pole) throw std::domain_error("f_derivative: argument at or past the pole");
    double dlog = s.alpha_n - lx / (s.n * s.beta * s.beta) + (1.0 / pole) / (1.0 - lx / pole);
    return f_function(s, x) * dlog / x;
}

double threshold_closed_form(double rho, unsigned n, double beta) {
    double bc = std::sqrt(rho * 2.0 * kLn2);
    return std::exp(n * beta * bc - (beta / (2.0 * bc)) * (std::log(bc * bc * n / 2.0) + std::log(4.0 * M_PI)));
}

AsymptoticsReport asymptotic_formulas(const ScaleSet& s) {
    AsymptoticsReport r;
    r.c_n_closed_form = threshold_closed_form(s.epsilon, s.n, s.beta);
    r.c_n_rel_dev = std::fabs(r.c_n_closed_form - s.c_n) / s.c_n;

    double ln_n = std::log(double(s.n));
    double lnln_n = std::log(ln_n);
    r.r_star_closed_form =
        std::exp(s.beta * std::sqrt(2.0 * s.c_star * s.n * ln_n) * (1.0 - lnln_n / (8.0 * s.c_star * ln_n)));
    r.r_star_rel_dev = std::fabs(r.r_star_closed_form - s.r_star) / s.r_star;

    if (s.epsilon_n > 0.0) {
        r.ratio_defined = true;
        r.ratio_exact = s.r_eps_n / s.c_n;
        double L = std::log(double(s.n) * s.n * s.theta);
        r.ratio_closed_form = std::exp(-L * (1.0 + L / (2.0 * s.n * s.beta * s.beta_c)));
        r.ratio_rel_dev = std::fabs(r.ratio_closed_form - r.ratio_exact) / r.ratio_exact;
    }
    return r;
}

ThetaReport theta_validation(const ScaleSet& s, double tol) {
    ThetaReport r;
    r.tol = tol;
    r.log_theta = std::log(s.theta);
    if (s.alpha < 1.0) {
        r.lower_bound_defined = true;
        r.lower_bound_log = (4.0 / (1.0 - s.alpha)) * std::log(s.r_star);
        r.pass_lower = r.log_theta > r.lower_bound_log;
        r.window_empty = (r.lower_bound_log >= s.n * tol);
        r.r4_ratio = std::exp(4.0 * std::log(s.r_star) - (1.0 - s.alpha) * r.log_theta);
        r.pass_r4 = r.r4_ratio <= tol;
    }
    r.pass_kappa = s.theta >= s.kappa_n;
    r.ll_ratio = r.log_theta / s.n;
    r.pass_ll = r.ll_ratio <= tol;
    return r;
}

} // namespace remlab
