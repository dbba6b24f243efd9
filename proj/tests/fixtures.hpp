#pragma once

#include <random>

#include "xlmimo/channel.hpp"
#include "xlmimo/estimation.hpp"

namespace fixtures {

using namespace xlmimo;

/// Random Hermitian positive definite matrix with trace n * scale.
inline CMatrix random_covariance(Rng& rng, int n, double scale) {
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = complex_normal(rng);
    CMatrix r = a * a.adjoint() + 0.1 * CMatrix::Identity(n, n);
    return r * (n * scale / r.trace().real());
}

inline void finish_link(LinkStatistics& s, int n) {
    s.beta_nlos = s.covariance.trace().real() / n;
    s.beta_los = s.mean.squaredNorm() / n;
    s.los = s.beta_los > 0.0;
    s.beta = s.beta_los + s.beta_nlos;
    s.sqrt_factor = psd_sqrt_factor(s.covariance);
}

/// Statistics with random full-rank covariances and optional random means.
inline ChannelStatistics random_statistics(Rng& rng, int K, int L, int N, bool with_mean = true) {
    ChannelStatistics stats(K, L, N);
    std::uniform_real_distribution<double> gain(-11.0, -8.0);
    std::bernoulli_distribution los(0.4);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            LinkStatistics& s = stats.link(k, l);
            const double beta = std::pow(10.0, gain(rng));
            s.covariance = random_covariance(rng, N, beta);
            s.mean = CVector::Zero(N);
            if (with_mean && los(rng))
                for (int n = 0; n < N; ++n) s.mean(n) = std::sqrt(beta) * complex_normal(rng);
            finish_link(s, N);
        }
    }
    return stats;
}

inline UplinkParams uplink(int K, int tau_p, double noise_power = 1e-10, double power = 10.0) {
    UplinkParams p;
    p.power = RVector::Constant(K, power);
    p.tau_p = tau_p;
    p.tau_c = 200;
    p.tau_u = 200 - tau_p;
    p.noise_power = noise_power;
    return p;
}

} // namespace fixtures
