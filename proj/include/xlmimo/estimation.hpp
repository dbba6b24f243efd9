#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Cholesky>

#include "xlmimo/channel.hpp"
#include "xlmimo/random.hpp"
#include "xlmimo/scenario.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo {

/// Pilot index per UE, 0-based in [0, tau_p).
struct PilotAssignment {
    int tau_p = 1;
    std::vector<int> pilot;

    int num_ues() const { return static_cast<int>(pilot.size()); }
    /// UEs on pilot t, ascending.
    std::vector<int> group(int t) const;
    /// UEs sharing k's pilot, k included.
    std::vector<int> sharers(int k) const { return group(pilot.at(k)); }
    std::vector<std::vector<int>> groups() const;
    std::vector<int> used_pilots() const;

    bool operator==(const PilotAssignment&) const = default;
};

/// Throws std::invalid_argument unless every pilot lies in [0, tau_p) and the size is K.
void check_assignment(const PilotAssignment& a, int num_ues);

struct UplinkParams {
    RVector power;  // mW per UE
    int tau_p = 1;
    int tau_c = 200;
    int tau_u = 199;
    double noise_power = 1.0;

    static UplinkParams from_config(const ScenarioConfig& cfg);
    double prelog() const { return double(tau_u) / double(tau_c); }
};

/// Despread pilot observations, one LN-vector column per pilot:
/// y_t = sum_{i: t_i = t} sqrt(p_i) tau_p h_i + n, n ~ CN(0, tau_p sigma^2 I).
/// Noise is drawn in a fixed order that does not depend on the assignment.
CMatrix synthesize_pilot_observation(const ChannelRealization& realization, const PilotAssignment& assignment,
                                     const UplinkParams& params, Rng& rng);

CMatrix psi_matrix(const PilotAssignment& assignment, const ChannelStatistics& stats, const UplinkParams& params,
                   int l, int t);

CVector mmse_estimate(const CMatrix& observation, const PilotAssignment& assignment, const ChannelStatistics& stats,
                      const UplinkParams& params, int k, int l);

CMatrix error_covariance(const PilotAssignment& assignment, const ChannelStatistics& stats,
                         const UplinkParams& params, int k, int l);

double nmse_per_ue(const PilotAssignment& assignment, const ChannelStatistics& stats, const UplinkParams& params,
                   int k);

/// Sum over UEs of NMSE_k; K times the average NMSE.
double average_nmse_cost(const PilotAssignment& assignment, const ChannelStatistics& stats,
                         const UplinkParams& params);

/// All MMSE quantities for a fixed assignment, reusable across coherence blocks.
class MmseEstimator {
public:
    MmseEstimator(const PilotAssignment& assignment, const ChannelStatistics& stats, const UplinkParams& params);

    /// Estimates for every UE at every SA, LN x K.
    CMatrix estimate(const CMatrix& observation) const;

    const CMatrix& error_covariance(int k, int l) const { return error_(k, l); }
    double nmse(int k) const { return nmse_(k); }
    const RVector& nmse() const { return nmse_; }

private:
    const ChannelStatistics* stats_;
    PilotAssignment assignment_;
    int antennas_;
    LinkGrid<CMatrix> gain_;   // sqrt(p_k) R_kl Psi^-1
    LinkGrid<CMatrix> error_;  // C_kl
    LinkGrid<CVector> mean_observation_;  // indexed (t, l)
    RVector nmse_;
};

/// Memoized cost of candidate assignments. Each UE's NMSE depends only on the
/// set of UEs sharing its pilot, so terms are cached by that set.
class CostEvaluator {
public:
    CostEvaluator(const ChannelStatistics& stats, const UplinkParams& params);

    double operator()(const PilotAssignment& assignment);
    double operator()(const std::vector<int>& pilots, int tau_p) { return (*this)(PilotAssignment{tau_p, pilots}); }

    /// NMSE of UE k when exactly the UEs in `group` share its pilot.
    double ue_term(int k, const std::vector<int>& group);

    std::uint64_t evaluations() const { return evaluations_; }
    int num_ues() const { return stats_->num_ues(); }

private:
    double compute_term(int k, const std::vector<int>& group) const;

    const ChannelStatistics* stats_;
    UplinkParams params_;
    RVector beta_sum_;
    std::vector<std::unordered_map<std::uint64_t, double>> memo_;
    std::uint64_t evaluations_ = 0;
};

} // namespace xlmimo
