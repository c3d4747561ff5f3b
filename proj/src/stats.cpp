#include "remlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace remlab {

WilsonCI wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 0.0, 1.0};
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    double lo = (successes == 0) ? 0.0 : std::max(0.0, center - half);
    double hi = (successes == trials) ? 1.0 : std::min(1.0, center + half);
    return {p, lo, hi};
}

double ks_statistic(const std::vector<double>& cdf_at_sorted) {
    std::size_t n = cdf_at_sorted.size();
    if (n == 0) throw std::invalid_argument("ks_statistic: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = cdf_at_sorted[i];
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::fabs(hi - f), std::fabs(f - lo)));
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

std::vector<double> isotonic_nonincreasing(const std::vector<double>& values) {
    // PAVA on the negated sequence (nondecreasing fit), then negate back.
    std::size_t n = values.size();
    std::vector<double> level;
    std::vector<double> weight;
    level.reserve(n);
    weight.reserve(n);
    for (double v : values) {
        level.push_back(-v);
        weight.push_back(1.0);
        while (level.size() >= 2 && level[level.size() - 2] > level.back()) {
            double w = weight[weight.size() - 2] + weight.back();
            double l = (level[level.size() - 2] * weight[weight.size() - 2] + level.back() * weight.back()) / w;
            level.pop_back();
            weight.pop_back();
            level.back() = l;
            weight.back() = w;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t k = 0; k < level.size(); ++k)
        for (double c = 0; c < weight[k]; ++c) out.push_back(-level[k]);
    return out;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / n};
}

MeanSE mean_se(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0, 0};
    Kahan s;
    for (double x : xs) s.add(x);
    double m = s.value() / xs.size();
    Kahan q;
    for (double x : xs) q.add((x - m) * (x - m));
    double var = xs.size() > 1 ? q.value() / (xs.size() - 1) : 0.0;
    return {m, std::sqrt(var / xs.size()), xs.size()};
}

} // namespace remlab
