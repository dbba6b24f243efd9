#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "xlmimo/types.hpp"

namespace xlmimo {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    RVector nodes;
    RVector weights;
};

/// Newton iteration on P_n from the Tricomi initial guess; nodes ascending.
inline GaussLegendreRule compute_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
    GaussLegendreRule rule{RVector(n), RVector(n)};
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes(n - 1 - i) = x;
        rule.nodes(i) = -x;
        rule.weights(i) = w;
        rule.weights(n - 1 - i) = w;
    }
    return rule;
}

/// Cached, thread-safe access to rules of any order.
inline std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const GaussLegendreRule>(compute_gauss_legendre(n));
    return slot;
}

} // namespace xlmimo
