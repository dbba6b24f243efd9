#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "xlmimo/channel.hpp"
#include "xlmimo/estimation.hpp"
#include "xlmimo/random.hpp"
#include "xlmimo/selection.hpp"

namespace xlmimo {

/// Row indices of the stacked LN-vector covered by the given SAs.
std::vector<Eigen::Index> subarray_rows(const std::vector<int>& subarrays, int antennas);

/// sum_i p_i blockdiag(C_il, l in subarrays) over the listed UEs.
CMatrix weighted_error_block(const MmseEstimator& estimator, const std::vector<int>& ues,
                             const std::vector<int>& subarrays, const RVector& power, int antennas);

/// v = p_k (sum_{i in partners} p_i (h_i h_i^H) + partner_error + sigma^2 I)^-1 h_k.
/// `estimates` holds already-restricted columns for all K UEs.
template <typename Derived>
CVector pmmse_combiner(const Eigen::MatrixBase<Derived>& estimates, const std::vector<int>& partners,
                       const CMatrix& partner_error, const RVector& power, double noise_power, int k) {
    CMatrix a = partner_error;
    a.diagonal().array() += noise_power;
    for (int i : partners) a.selfadjointView<Eigen::Lower>().rankUpdate(estimates.col(i), power(i));
    Eigen::LLT<CMatrix, Eigen::Lower> llt(a);  // reads the lower triangle only
    if (llt.info() != Eigen::Success) throw std::runtime_error("pmmse_combiner: factorization failed");
    return power(k) * llt.solve(CVector(estimates.col(k)));
}

/// Effective uplink SINR of UE k; interference runs over all columns of `estimates`.
template <typename Derived>
double sinr_ul(const CVector& v, const Eigen::MatrixBase<Derived>& estimates, const CMatrix& error_sum,
               const RVector& power, double noise_power, int k) {
    if (v.size() == 0) return 0.0;
    const CVector gains = estimates.adjoint() * v;  // conj(v^H h_i)
    double signal = 0.0, interference = 0.0;
    for (Eigen::Index i = 0; i < gains.size(); ++i) {
        const double g = power(i) * std::norm(gains(i));
        if (i == k) signal = g; else interference += g;
    }
    const double denom = interference + (v.adjoint() * error_sum * v).value().real() + noise_power * v.squaredNorm();
    if (!(denom > 0.0)) return 0.0;
    return signal / denom;
}

/// prelog * mean(log2(1 + sinr)).
double se_ul(const std::vector<double>& sinr, double prelog);

/// Per-drop precomputation of serving rows and error blocks for every UE.
/// Combiners are solved through the partner subspace: the regularizer
/// sum_i p_i C_i + sigma^2 I is block diagonal over SAs, so only a
/// |S_k| x |S_k| system remains per UE and block.
class PmmseDetector {
public:
    PmmseDetector(const MmseEstimator& estimator, const ServingMap& map, const UplinkParams& params, int antennas);

    /// SINR of every UE for one coherence block given the full LN x K estimates.
    RVector sinr(const CMatrix& estimates) const;

    /// Combiner of UE k on its reduced serving space (empty if unserved).
    CVector combiner(const CMatrix& estimates, int k) const;

    const std::vector<Eigen::Index>& rows(int k) const { return rows_[k]; }

private:
    const ServingMap* map_;
    UplinkParams params_;
    std::vector<std::vector<Eigen::Index>> rows_;
    int antennas_;
    std::vector<CMatrix> regularizer_inverse_;  // stacked N x N block inverses
    std::vector<CMatrix> total_error_;

    CMatrix apply_inverse(int k, const CMatrix& x) const;
};

/// y = sum_i h_i s_i + n, n ~ CN(0, sigma^2 I); symbols carry their power.
CVector synthesize_uplink(const ChannelRealization& realization, const CVector& symbols, double noise_power,
                          Rng& rng);

/// s_hat_k = v^H y restricted to the given rows.
cdouble estimate_symbol(const CVector& received, const CVector& combiner, const std::vector<Eigen::Index>& rows);

} // namespace xlmimo
