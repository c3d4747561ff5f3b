#ifndef REMLAB_STATS_HPP
#define REMLAB_STATS_HPP

#include <cstddef>
#include <utility>
#include <vector>

namespace remlab {

// Compensated (Kahan) accumulator. Clock values and local times span many
// orders of magnitude, so the dynamics kernels sum through this.
class Kahan {
public:
    Kahan() = default;
    explicit Kahan(double v) : sum_(v) {}
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }
private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct WilsonCI {
    double estimate;  // point estimate p-hat
    double lo;
    double hi;
};

// Wilson 95% score interval for a binomial proportion.
WilsonCI wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

// One-sample Kolmogorov-Smirnov statistic against a CDF given at the sorted
// sample points: sup |F_emp - F|. `cdf_at_sorted[i]` = F(sample_(i)).
double ks_statistic(const std::vector<double>& cdf_at_sorted);

// Two-sample KS statistic (samples need not be sorted on input).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Pool-adjacent-violators: smallest nonincreasing majorant fit (for tail
// estimates over an increasing u grid).
std::vector<double> isotonic_nonincreasing(const std::vector<double>& values);

// Ordinary least squares slope/intercept of y on x.
struct LinearFit {
    double slope;
    double intercept;
};
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

// Sample mean and standard error.
struct MeanSE {
    double mean;
    double se;
    std::size_t count;
};
MeanSE mean_se(const std::vector<double>& xs);

} // namespace remlab

#endif
