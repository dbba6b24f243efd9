#include "xlmimo/estimation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xlmimo {

std::vector<int> PilotAssignment::group(int t) const {
    std::vector<int> out;
    for (int k = 0; k < num_ues(); ++k)
        if (pilot[k] == t) out.push_back(k);
    return out;
}

std::vector<std::vector<int>> PilotAssignment::groups() const {
    std::vector<std::vector<int>> out(tau_p);
    for (int k = 0; k < num_ues(); ++k) out.at(pilot[k]).push_back(k);
    return out;
}

std::vector<int> PilotAssignment::used_pilots() const {
    std::vector<bool> used(tau_p, false);
    for (int t : pilot) used.at(t) = true;
    std::vector<int> out;
    for (int t = 0; t < tau_p; ++t)
        if (used[t]) out.push_back(t);
    return out;
}

void check_assignment(const PilotAssignment& a, int num_ues) {
    if (a.tau_p < 1) throw std::invalid_argument("assignment: tau_p must be >= 1");
    if (a.num_ues() != num_ues)
        throw std::invalid_argument("assignment: expected " + std::to_string(num_ues) + " UEs, got " +
                                    std::to_string(a.num_ues()));
    for (int k = 0; k < a.num_ues(); ++k)
        if (a.pilot[k] < 0 || a.pilot[k] >= a.tau_p)
            throw std::invalid_argument("assignment: pilot of UE " + std::to_string(k) + " out of range");
}

UplinkParams UplinkParams::from_config(const ScenarioConfig& cfg) {
    UplinkParams p;
    p.power = RVector::Constant(cfg.K, cfg.ue_power);
    p.tau_p = cfg.tau_p;
    p.tau_c = cfg.tau_c;
    p.tau_u = cfg.data_symbols();
    p.noise_power = cfg.noise_power;
    return p;
}

CMatrix synthesize_pilot_observation(const ChannelRealization& realization, const PilotAssignment& assignment,
                                     const UplinkParams& params, Rng& rng) {
    const Eigen::Index rows = realization.h.rows();
    const int tau_p = assignment.tau_p;
    const double noise_std = std::sqrt(tau_p * params.noise_power);
    CMatrix y(rows, tau_p);
    for (int t = 0; t < tau_p; ++t)
        for (Eigen::Index r = 0; r < rows; ++r) y(r, t) = noise_std * complex_normal(rng);
    for (int i = 0; i < assignment.num_ues(); ++i)
        y.col(assignment.pilot[i]) += (std::sqrt(params.power(i)) * tau_p) * realization.h.col(i);
    return y;
}

CMatrix psi_matrix(const PilotAssignment& assignment, const ChannelStatistics& stats, const UplinkParams& params,
                   int l, int t) {
    const int N = stats.antennas();
    CMatrix psi = params.noise_power * CMatrix::Identity(N, N);
    for (int i : assignment.group(t)) psi += (params.power(i) * assignment.tau_p) * stats.link(i, l).covariance;
    return psi;
}

namespace {

CVector mean_observation(const PilotAssignment& assignment, const ChannelStatistics& stats,
                         const UplinkParams& params, int l, int t) {
    CVector mean = CVector::Zero(stats.antennas());
    for (int i : assignment.group(t))
        mean += (std::sqrt(params.power(i)) * assignment.tau_p) * stats.link(i, l).mean;
    return mean;
}

CMatrix hermitian_part(const CMatrix& a) { return (a + a.adjoint()) / 2.0; }

} // namespace

CVector mmse_estimate(const CMatrix& observation, const PilotAssignment& assignment, const ChannelStatistics& stats,
                      const UplinkParams& params, int k, int l) {
    const int N = stats.antennas();
    const int t = assignment.pilot.at(k);
    Eigen::LLT<CMatrix> llt(psi_matrix(assignment, stats, params, l, t));
    if (llt.info() != Eigen::Success) throw std::runtime_error("mmse_estimate: Psi factorization failed");
    const CVector innovation =
        observation.block(Eigen::Index(l) * N, t, N, 1) - mean_observation(assignment, stats, params, l, t);
    const LinkStatistics& s = stats.link(k, l);
    return s.mean + std::sqrt(params.power(k)) * (s.covariance * llt.solve(innovation));
}

CMatrix error_covariance(const PilotAssignment& assignment, const ChannelStatistics& stats,
                         const UplinkParams& params, int k, int l) {
    Eigen::LLT<CMatrix> llt(psi_matrix(assignment, stats, params, l, assignment.pilot.at(k)));
    if (llt.info() != Eigen::Success) throw std::runtime_error("error_covariance: Psi factorization failed");
    const CMatrix& r = stats.link(k, l).covariance;
    return hermitian_part(r - (params.power(k) * assignment.tau_p) * (r * llt.solve(r)));
}

double nmse_per_ue(const PilotAssignment& assignment, const ChannelStatistics& stats, const UplinkParams& params,
                   int k) {
    double err = 0.0, gain = 0.0;
    for (int l = 0; l < stats.num_subarrays(); ++l) {
        err += error_covariance(assignment, stats, params, k, l).trace().real();
        gain += stats.link(k, l).beta;
    }
    return err / (stats.antennas() * gain);
}

double average_nmse_cost(const PilotAssignment& assignment, const ChannelStatistics& stats,
                         const UplinkParams& params) {
    double cost = 0.0;
    for (int k = 0; k < stats.num_ues(); ++k) cost += nmse_per_ue(assignment, stats, params, k);
    return cost;
}

MmseEstimator::MmseEstimator(const PilotAssignment& assignment, const ChannelStatistics& stats,
                             const UplinkParams& params)
    : stats_(&stats),
      assignment_(assignment),
      antennas_(stats.antennas()),
      gain_(stats.num_ues(), stats.num_subarrays()),
      error_(stats.num_ues(), stats.num_subarrays()),
      mean_observation_(assignment.tau_p, stats.num_subarrays()),
      nmse_(RVector::Zero(stats.num_ues())) {
    check_assignment(assignment, stats.num_ues());
    const int K = stats.num_ues();
    const int L = stats.num_subarrays();
    const auto groups = assignment.groups();
    RVector err = RVector::Zero(K), gain = RVector::Zero(K);
    for (int l = 0; l < L; ++l) {
        for (int t = 0; t < assignment.tau_p; ++t) {
            mean_observation_(t, l) = mean_observation(assignment, stats, params, l, t);
            if (groups[t].empty()) continue;
            Eigen::LLT<CMatrix> llt(psi_matrix(assignment, stats, params, l, t));
            if (llt.info() != Eigen::Success) throw std::runtime_error("MmseEstimator: Psi factorization failed");
            for (int k : groups[t]) {
                const CMatrix& r = stats.link(k, l).covariance;
                const CMatrix psi_inv_r = llt.solve(r);
                gain_(k, l) = std::sqrt(params.power(k)) * psi_inv_r.adjoint();
                error_(k, l) = hermitian_part(r - (params.power(k) * assignment.tau_p) * (r * psi_inv_r));
                err(k) += error_(k, l).trace().real();
                gain(k) += stats.link(k, l).beta;
            }
        }
    }
    nmse_ = err.array() / (antennas_ * gain.array());
}

CMatrix MmseEstimator::estimate(const CMatrix& observation) const {
    const int K = stats_->num_ues();
    const int L = stats_->num_subarrays();
    const int N = antennas_;
    CMatrix out(Eigen::Index(L) * N, K);
    for (int k = 0; k < K; ++k) {
        const int t = assignment_.pilot[k];
        for (int l = 0; l < L; ++l) {
            const auto block = Eigen::seqN(Eigen::Index(l) * N, N);
            out(block, k) = stats_->link(k, l).mean +
                            gain_(k, l) * (observation(block, t) - mean_observation_(t, l));
        }
    }
    return out;
}

CostEvaluator::CostEvaluator(const ChannelStatistics& stats, const UplinkParams& params)
    : stats_(&stats), params_(params), beta_sum_(stats.beta().rowwise().sum()), memo_(stats.num_ues()) {}

double CostEvaluator::compute_term(int k, const std::vector<int>& group) const {
    const int N = stats_->antennas();
    const double scale = params_.power(k) * params_.tau_p;
    double err = 0.0;
    for (int l = 0; l < stats_->num_subarrays(); ++l) {
        CMatrix psi = params_.noise_power * CMatrix::Identity(N, N);
        for (int i : group) psi += (params_.power(i) * params_.tau_p) * stats_->link(i, l).covariance;
        Eigen::LLT<CMatrix> llt(psi);
        if (llt.info() != Eigen::Success) throw std::runtime_error("cost: Psi factorization failed");
        const CMatrix& r = stats_->link(k, l).covariance;
        // tr(R Psi^-1 R) = ||L^-1 R||_F^2
        const CMatrix w = llt.matrixL().solve(r);
        err += r.trace().real() - scale * w.squaredNorm();
    }
    return err / (N * beta_sum_(k));
}

double CostEvaluator::ue_term(int k, const std::vector<int>& group) {
    if (stats_->num_ues() > 64) return compute_term(k, group);
    std::uint64_t key = 0;
    for (int i : group) key |= std::uint64_t(1) << i;
    auto& memo = memo_[k];
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double value = compute_term(k, group);
    memo.emplace(key, value);
    return value;
}

double CostEvaluator::operator()(const PilotAssignment& assignment) {
    check_assignment(assignment, stats_->num_ues());
    if (assignment.tau_p != params_.tau_p) throw std::invalid_argument("cost: assignment tau_p differs from uplink tau_p");
    ++evaluations_;
    const auto groups = assignment.groups();
    double cost = 0.0;
    for (int k = 0; k < assignment.num_ues(); ++k) cost += ue_term(k, groups[assignment.pilot[k]]);
    return cost;
}

} // namespace xlmimo
