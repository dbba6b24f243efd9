#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "xlmimo/channel.hpp"
#include "xlmimo/estimation.hpp"
#include "xlmimo/random.hpp"
#include "xlmimo/scenario.hpp"

namespace xlmimo {

/// Raised when exhaustive search would exceed its candidate budget.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

PilotAssignment random_pa(int num_ues, int tau_p, Rng& rng);

/// First tau_p UEs take pilots 0..tau_p-1; each later UE takes the pilot with
/// the least accumulated NLoS gain at its strongest SA (or summed over SAs).
PilotAssignment greedy_pa(const ChannelStatistics& stats, int tau_p,
                          GreedyMetric metric = GreedyMetric::strongest_subarray);

struct SearchResult {
    PilotAssignment assignment;
    double cost = 0.0;
    std::uint64_t evaluations = 0;
};

struct GenieOptions {
    double budget = 1e6;
    bool fix_first_pilot = false;  // relabel symmetry: search only t_0 = 0
};

/// Exhaustive search in lexicographic order; the first minimizer wins ties.
SearchResult genie_pa(CostEvaluator& cost, int tau_p, const GenieOptions& options = {});

struct GaOptions {
    int iterations = 15;
    int population = 2;
    int elite = 2;
    double mutation_probability = 0.02;
    std::vector<std::vector<int>> initial;  // seeds the first population; rest random

    static GaOptions from_config(const ScenarioConfig& cfg);
};

struct GaResult : SearchResult {
    std::vector<double> trace;  // best-ever cost after each iteration
};

GaResult ga_pa(CostEvaluator& cost, int tau_p, const GaOptions& options, Rng& rng);

} // namespace xlmimo
