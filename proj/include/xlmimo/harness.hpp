#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "xlmimo/assignment.hpp"
#include "xlmimo/channel.hpp"
#include "xlmimo/estimation.hpp"
#include "xlmimo/scenario.hpp"

namespace xlmimo {

/// Outcome of one PA method on one drop.
struct MethodRecord {
    PaMethod method = PaMethod::random;
    PilotAssignment assignment;
    double cost = 0.0;  // sum of per-UE NMSE
    std::uint64_t evaluations = 0;
    RVector nmse;
    RVector se;
    std::vector<int> n_serving;
    std::vector<double> ga_trace;

    bool served(int k) const { return n_serving.at(k) > 0; }
    double average_nmse() const { return nmse.mean(); }
    double max_nmse() const { return nmse.maxCoeff(); }
    double min_nmse() const { return nmse.minCoeff(); }
    double sum_se() const { return se.sum(); }
    double min_se() const { return se.minCoeff(); }
    double max_se() const { return se.maxCoeff(); }
};

struct DropResult {
    int drop_id = 0;
    std::uint64_t seed = 0;
    std::uint64_t checksum = 0;  // of the statistics shared by all methods
    double los_fraction = 0.0;
    int quadrature_warnings = 0;
    int shadow_jitter_steps = 0;
    std::vector<MethodRecord> methods;

    const MethodRecord& record(PaMethod m) const;
};

struct DropFailure {
    int drop_id = 0;
    std::uint64_t seed = 0;
    std::string message;
};

/// Seed of a drop, derived from the master seed and the drop index only.
std::uint64_t drop_seed(std::uint64_t master_seed, int drop_id);

struct DropStatistics {
    Topology topology;
    LinkGrid<LinkGeometry> geometry;
    ChannelStatistics stats;
    int shadow_jitter_steps = 0;
};

/// Topology, visibility, shadowing and channel statistics of one drop.
DropStatistics drop_statistics(const ScenarioConfig& cfg, int drop_id);

/// Scenario, statistics, every configured PA method, selection, and
/// per-block estimation and combining. All methods share statistics and
/// per-realization channel and noise streams.
DropResult run_drop(const ScenarioConfig& cfg, int drop_id);

/// One K value of a campaign.
struct CampaignBlock {
    int K = 0;
    std::vector<PaMethod> methods;
    std::vector<DropResult> drops;  // successful, ascending drop_id
    std::vector<DropFailure> failures;
    std::vector<std::string> notes;
};

struct CampaignResult {
    ScenarioConfig config;
    bool sweep = false;
    std::vector<CampaignBlock> blocks;

    int failure_count() const;
};

struct CampaignOptions {
    int threads = 1;
    bool progress = false;  // progress lines on stderr
};

CampaignResult run_campaign(const ScenarioConfig& cfg, const CampaignOptions& options = {});

enum class OutputFormat { csv, json, both };
OutputFormat parse_output_format(const std::string& text);

struct WriteOptions {
    OutputFormat format = OutputFormat::both;
    bool ga_trace = false;
};

/// Per-method aggregates and CDFs for one block.
nlohmann::json block_summary(const CampaignBlock& block);
nlohmann::json campaign_summary(const CampaignResult& result);

/// Writes result files into `dir`; throws "no successful drops" on an empty campaign.
void write_results(const CampaignResult& result, const std::filesystem::path& dir, const WriteOptions& options = {});

/// Double formatted with 17 significant digits.
std::string format_double(double v);

} // namespace xlmimo
