#include "xlmimo/detection.hpp"

#include <cmath>

namespace xlmimo {

std::vector<Eigen::Index> subarray_rows(const std::vector<int>& subarrays, int antennas) {
    std::vector<Eigen::Index> rows;
    rows.reserve(subarrays.size() * std::size_t(antennas));
    for (int l : subarrays)
        for (int n = 0; n < antennas; ++n) rows.push_back(Eigen::Index(l) * antennas + n);
    return rows;
}

CMatrix weighted_error_block(const MmseEstimator& estimator, const std::vector<int>& ues,
                             const std::vector<int>& subarrays, const RVector& power, int antennas) {
    const Eigen::Index n = Eigen::Index(subarrays.size()) * antennas;
    CMatrix out = CMatrix::Zero(n, n);
    for (std::size_t b = 0; b < subarrays.size(); ++b) {
        auto block = out.block(Eigen::Index(b) * antennas, Eigen::Index(b) * antennas, antennas, antennas);
        for (int i : ues) block += power(i) * estimator.error_covariance(i, subarrays[b]);
    }
    return out;
}

double se_ul(const std::vector<double>& sinr, double prelog) {
    if (sinr.empty()) throw std::invalid_argument("se_ul: no realizations");
    double sum = 0.0;
    for (double s : sinr) sum += std::log2(1.0 + s);
    return prelog * sum / double(sinr.size());
}

PmmseDetector::PmmseDetector(const MmseEstimator& estimator, const ServingMap& map, const UplinkParams& params,
                             int antennas)
    : map_(&map), params_(params), antennas_(antennas) {
    const int K = map.num_ues();
    std::vector<int> everyone(K);
    for (int i = 0; i < K; ++i) everyone[i] = i;
    rows_.resize(K);
    regularizer_inverse_.resize(K);
    total_error_.resize(K);
    for (int k = 0; k < K; ++k) {
        if (!map.served(k)) continue;
        rows_[k] = subarray_rows(map.serving[k], antennas);
        const auto& sas = map.serving[k];
        CMatrix& inv = regularizer_inverse_[k];
        inv.resize(Eigen::Index(sas.size()) * antennas, antennas);
        const CMatrix identity = CMatrix::Identity(antennas, antennas);
        for (std::size_t b = 0; b < sas.size(); ++b) {
            CMatrix block = params.noise_power * identity;
            for (int i : map.partners[k]) block += params.power(i) * estimator.error_covariance(i, sas[b]);
            Eigen::LLT<CMatrix> llt(block);
            if (llt.info() != Eigen::Success) throw std::runtime_error("PmmseDetector: singular regularizer block");
            inv.middleRows(Eigen::Index(b) * antennas, antennas) = llt.solve(identity);
        }
        total_error_[k] = weighted_error_block(estimator, everyone, sas, params.power, antennas);
    }
}

CMatrix PmmseDetector::apply_inverse(int k, const CMatrix& x) const {
    const CMatrix& inv = regularizer_inverse_[k];
    CMatrix out(x.rows(), x.cols());
    for (Eigen::Index b = 0; b < inv.rows(); b += antennas_)
        out.middleRows(b, antennas_).noalias() = inv.middleRows(b, antennas_) * x.middleRows(b, antennas_);
    return out;
}

CVector PmmseDetector::combiner(const CMatrix& estimates, int k) const {
    if (!map_->served(k)) return CVector();
    std::vector<int> active;  // silent partners add nothing to the covariance
    for (int i : map_->partners[k])
        if (params_.power(i) > 0.0) active.push_back(i);
    const CVector dt = apply_inverse(k, estimates(rows_[k], k));
    if (active.empty()) return params_.power(k) * dt;
    const CMatrix h = estimates(rows_[k], active);
    const CMatrix dh = apply_inverse(k, h);
    // Woodbury: (D + H P H^H)^-1 t = D^-1 t - D^-1 H (P^-1 + H^H D^-1 H)^-1 H^H D^-1 t
    CMatrix capacitance = h.adjoint() * dh;
    for (std::size_t j = 0; j < active.size(); ++j) capacitance(j, j) += 1.0 / params_.power(active[j]);
    const Eigen::LDLT<CMatrix> ldlt(capacitance);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("PmmseDetector: capacitance factorization failed");
    const CVector x = ldlt.solve(CVector(h.adjoint() * dt));
    return params_.power(k) * (dt - dh * x);
}

RVector PmmseDetector::sinr(const CMatrix& estimates) const {
    const int K = map_->num_ues();
    RVector out = RVector::Zero(K);
    for (int k = 0; k < K; ++k) {
        if (!map_->served(k)) continue;
        const CVector v = combiner(estimates, k);
        out(k) = sinr_ul(v, estimates(rows_[k], Eigen::all), total_error_[k], params_.power, params_.noise_power, k);
    }
    return out;
}

CVector synthesize_uplink(const ChannelRealization& realization, const CVector& symbols, double noise_power,
                          Rng& rng) {
    const Eigen::Index rows = realization.h.rows();
    const double noise_std = std::sqrt(noise_power);
    CVector y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) y(r) = noise_std * complex_normal(rng);
    y += realization.h * symbols;
    return y;
}

cdouble estimate_symbol(const CVector& received, const CVector& combiner, const std::vector<Eigen::Index>& rows) {
    if (combiner.size() == 0) return {0.0, 0.0};
    return combiner.dot(received(rows));
}

} // namespace xlmimo
