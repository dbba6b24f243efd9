#pragma once

#include <utility>
#include <vector>

namespace xlmimo {

/// Empirical CDF as (value, fraction <= value) at each distinct sample, ascending.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples);

double mean(const std::vector<double>& values);

struct SignTest {
    int wins = 0;    // a > b
    int losses = 0;  // a < b
    int ties = 0;
    double p_value = 1.0;  // one-sided, H1: a tends to exceed b
};

/// Paired one-sided sign test; ties are discarded.
SignTest sign_test_greater(const std::vector<double>& a, const std::vector<double>& b);

/// P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(int n, int k);

} // namespace xlmimo
