#pragma once

// Chi-squared goodness-of-fit support for the statistical acceptance checks.
// The p-value comes from the regularized upper incomplete gamma Q(k/2, x/2)
// (series + continued-fraction evaluation, Numerical Recipes style).

#include <cmath>
#include <cstdint>
#include <vector>

namespace semo::stats {

inline double gamma_series_p(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-12) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf_q(double a, double x) {
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-12) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Q(a, x) = 1 - P(a, x)
inline double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series_p(a, x);
    return gamma_cf_q(a, x);
}

// p-value of a chi-squared statistic with the given degrees of freedom
inline double chi2_pvalue(double statistic, int dof) {
    return gamma_q(static_cast<double>(dof) / 2.0, statistic / 2.0);
}

// observed counts vs expected counts; returns the p-value
inline double chi2_test(const std::vector<uint64_t>& observed,
                        const std::vector<double>& expected) {
    double stat = 0.0;
    int dof = -1;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        double diff = static_cast<double>(observed[i]) - expected[i];
        stat += diff * diff / expected[i];
        ++dof;
    }
    if (dof < 1) return 1.0;
    return chi2_pvalue(stat, dof);
}

}  // namespace semo::stats
