#include "xlmimo/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace xlmimo {

PilotAssignment random_pa(int num_ues, int tau_p, Rng& rng) {
    if (num_ues < 1 || tau_p < 1) throw std::invalid_argument("random_pa: K and tau_p must be >= 1");
    std::uniform_int_distribution<int> pick(0, tau_p - 1);
    PilotAssignment a{tau_p, std::vector<int>(num_ues)};
    for (int& t : a.pilot) t = pick(rng);
    return a;
}

PilotAssignment greedy_pa(const ChannelStatistics& stats, int tau_p, GreedyMetric metric) {
    const int K = stats.num_ues();
    if (tau_p < 1) throw std::invalid_argument("greedy_pa: tau_p must be >= 1");
    const RMatrix beta = stats.beta();
    const RMatrix beta_nlos = stats.beta_nlos();
    const RVector nlos_total = beta_nlos.rowwise().sum();

    PilotAssignment a{tau_p, std::vector<int>(K, 0)};
    for (int k = 0; k < std::min(tau_p, K); ++k) a.pilot[k] = k;
    for (int k = tau_p; k < K; ++k) {
        Eigen::Index strongest = 0;
        beta.row(k).maxCoeff(&strongest);
        std::vector<double> contamination(tau_p, 0.0);
        for (int i = 0; i < k; ++i)
            contamination[a.pilot[i]] +=
                metric == GreedyMetric::strongest_subarray ? beta_nlos(i, strongest) : nlos_total(i);
        int best = 0;
        for (int t = 1; t < tau_p; ++t)
            if (contamination[t] < contamination[best]) best = t;
        a.pilot[k] = best;
    }
    return a;
}

SearchResult genie_pa(CostEvaluator& cost, int tau_p, const GenieOptions& options) {
    const int K = cost.num_ues();
    if (tau_p < 1) throw std::invalid_argument("genie_pa: tau_p must be >= 1");
    const int free_digits = options.fix_first_pilot ? K - 1 : K;
    const double candidates = std::pow(double(tau_p), double(free_digits));
    if (candidates > options.budget)
        throw BudgetExceeded("genie_pa: " + std::to_string(tau_p) + "^" + std::to_string(free_digits) +
                             " candidates exceed the exhaustive budget; use the ga method instead");

    const std::uint64_t start = cost.evaluations();
    PilotAssignment current{tau_p, std::vector<int>(K, 0)};
    SearchResult result{current, cost(current), 0};
    const int first = options.fix_first_pilot ? 1 : 0;
    while (true) {
        // odometer increment, last UE fastest, so visiting order is lexicographic
        int pos = K - 1;
        while (pos >= first && current.pilot[pos] == tau_p - 1) current.pilot[pos--] = 0;
        if (pos < first) break;
        ++current.pilot[pos];
        const double c = cost(current);
        if (c < result.cost) {
            result.cost = c;
            result.assignment = current;
        }
    }
    result.evaluations = cost.evaluations() - start;
    return result;
}

GaOptions GaOptions::from_config(const ScenarioConfig& cfg) {
    GaOptions o;
    o.iterations = cfg.ga.iterations;
    o.population = cfg.ga_population();
    o.elite = cfg.ga_elite();
    o.mutation_probability = cfg.ga.mutation_probability;
    return o;
}

namespace {

struct Candidate {
    std::vector<int> pilots;
    double cost = 0.0;
};

void sort_ascending(std::vector<Candidate>& population) {
    std::stable_sort(population.begin(), population.end(),
                     [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
}

} // namespace

GaResult ga_pa(CostEvaluator& cost, int tau_p, const GaOptions& options, Rng& rng) {
    const int K = cost.num_ues();
    const int A = options.population;
    if (tau_p < 1) throw std::invalid_argument("ga_pa: tau_p must be >= 1");
    if (A < 2) throw std::invalid_argument("ga_pa: population must be >= 2");
    if (options.elite < 2 || options.elite > A) throw std::invalid_argument("ga_pa: elite must lie in [2, population]");
    if (options.iterations < 1) throw std::invalid_argument("ga_pa: iterations must be >= 1");
    if (options.mutation_probability < 0.0 || options.mutation_probability > 1.0)
        throw std::invalid_argument("ga_pa: mutation probability must lie in [0, 1]");

    const std::uint64_t start = cost.evaluations();
    std::uniform_int_distribution<int> any_pilot(0, tau_p - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Candidate> population(A);
    for (int a = 0; a < A; ++a) {
        if (a < int(options.initial.size())) {
            population[a].pilots = options.initial[a];
        } else {
            population[a].pilots.resize(K);
            for (int& t : population[a].pilots) t = any_pilot(rng);
        }
        population[a].cost = cost(population[a].pilots, tau_p);
    }
    sort_ascending(population);

    GaResult result;
    result.assignment = PilotAssignment{tau_p, population.front().pilots};
    result.cost = population.front().cost;
    result.trace.push_back(result.cost);

    std::uniform_int_distribution<int> first_parent(0, options.elite - 1);
    std::uniform_int_distribution<int> second_parent(0, options.elite - 2);
    std::uniform_int_distribution<int> cut(2, std::max(2, K));  // 1-based crossover point
    std::uniform_int_distribution<int> other_pilot(0, std::max(0, tau_p - 2));

    std::vector<Candidate> offspring(A);
    for (int i = 2; i <= options.iterations; ++i) {
        for (int a = 0; a < A; ++a) {
            const int p = first_parent(rng);
            int q = second_parent(rng);
            if (q >= p) ++q;
            std::vector<int>& child = offspring[a].pilots;
            child = population[p].pilots;
            if (K >= 2) {
                const int c = cut(rng);
                std::copy(population[q].pilots.begin() + (c - 1), population[q].pilots.end(), child.begin() + (c - 1));
            }
            for (int& t : child) {
                if (unit(rng) < options.mutation_probability && tau_p > 1) {
                    int u = other_pilot(rng);
                    if (u >= t) ++u;
                    t = u;
                }
            }
            offspring[a].cost = cost(child, tau_p);
        }
        population.swap(offspring);
        sort_ascending(population);
        if (population.front().cost < result.cost) {
            result.cost = population.front().cost;
            result.assignment = PilotAssignment{tau_p, population.front().pilots};
        }
        result.trace.push_back(result.cost);
    }
    result.evaluations = cost.evaluations() - start;
    return result;
}

} // namespace xlmimo
