#include "xlmimo/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xlmimo {

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> out;
    const double n = double(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
        out.emplace_back(samples[i], double(i + 1) / n);
    }
    return out;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / double(values.size());
}

double binomial_upper_tail(int n, int k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    double p = 0.0;
    for (int j = k; j <= n; ++j)
        p += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) - n * std::log(2.0));
    return std::min(p, 1.0);
}

SignTest sign_test_greater(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sign test needs paired samples");
    SignTest t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) ++t.wins;
        else if (a[i] < b[i]) ++t.losses;
        else ++t.ties;
    }
    t.p_value = binomial_upper_tail(t.wins + t.losses, t.wins);
    return t;
}

} // namespace xlmimo
