#include "xlmimo/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "xlmimo/detection.hpp"
#include "xlmimo/selection.hpp"
#include "xlmimo/statistics.hpp"

namespace xlmimo {

const MethodRecord& DropResult::record(PaMethod m) const {
    for (const auto& r : methods)
        if (r.method == m) return r;
    throw std::out_of_range("drop " + std::to_string(drop_id) + " has no record for " + std::string(to_string(m)));
}

int CampaignResult::failure_count() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.failures.size());
    return n;
}

std::uint64_t drop_seed(std::uint64_t master_seed, int drop_id) {
    return SeedTree(master_seed).child("drop").child(std::uint64_t(drop_id)).seed();
}

namespace {

bool genie_fits(const ScenarioConfig& cfg) {
    return std::pow(double(cfg.tau_p), double(cfg.K)) <= cfg.genie_budget;
}

} // namespace

DropStatistics drop_statistics(const ScenarioConfig& cfg, int drop_id) {
    const SeedTree seeds(drop_seed(cfg.master_seed, drop_id));
    DropStatistics out;
    Rng topo_rng = seeds.child("topology").engine();
    out.topology = build_topology(cfg, topo_rng);
    out.geometry = link_geometry(out.topology);

    Rng vis_rng = seeds.child("visibility").engine();
    const VisibilityMask visibility = sample_visibility(out.geometry, vis_rng);

    // one unit-variance factor serves both components
    const ShadowSampler shadow(shadow_cross_covariance(out.topology, out.geometry, cfg.decorr_distance, 1.0));
    Rng los_rng = seeds.child("shadow_los").engine();
    Rng nlos_rng = seeds.child("shadow_nlos").engine();
    const ShadowField los_shadow = shadow.sample(los_rng, cfg.K, cfg.L, cfg.sigma_sf_los);
    const ShadowField nlos_shadow = shadow.sample(nlos_rng, cfg.K, cfg.L, cfg.sigma_sf_nlos);
    out.shadow_jitter_steps = shadow.jitter_steps();
    out.stats = channel_statistics(out.geometry, visibility, los_shadow, nlos_shadow, cfg);
    return out;
}

DropResult run_drop(const ScenarioConfig& cfg, int drop_id) {
    const SeedTree seeds(drop_seed(cfg.master_seed, drop_id));
    DropResult out;
    out.drop_id = drop_id;
    out.seed = seeds.seed();

    const DropStatistics drop = drop_statistics(cfg, drop_id);
    const ChannelStatistics& stats = drop.stats;
    out.checksum = stats.checksum();
    out.los_fraction = stats.los_fraction();
    out.quadrature_warnings = stats.quadrature_warnings;
    out.shadow_jitter_steps = drop.shadow_jitter_steps;

    const UplinkParams params = UplinkParams::from_config(cfg);
    CostEvaluator cost(stats, params);

    // deques keep element addresses stable; detectors point into estimators and maps
    std::deque<MmseEstimator> estimators;
    std::deque<ServingMap> maps;
    std::vector<PmmseDetector> detectors;
    std::vector<std::vector<std::vector<double>>> sinr;

    for (PaMethod method : cfg.pa_methods) {
        MethodRecord rec;
        rec.method = method;
        const std::uint64_t before = cost.evaluations();
        switch (method) {
        case PaMethod::random: {
            Rng rng = seeds.child("pa_random").engine();
            rec.assignment = random_pa(cfg.K, cfg.tau_p, rng);
            break;
        }
        case PaMethod::greedy:
            rec.assignment = greedy_pa(stats, cfg.tau_p, cfg.greedy_metric);
            break;
        case PaMethod::genie: {
            GenieOptions opts;
            opts.budget = cfg.genie_budget;
            rec.assignment = genie_pa(cost, cfg.tau_p, opts).assignment;
            break;
        }
        case PaMethod::ga: {
            Rng rng = seeds.child("pa_ga").engine();
            GaResult ga = ga_pa(cost, cfg.tau_p, GaOptions::from_config(cfg), rng);
            rec.assignment = ga.assignment;
            rec.ga_trace = std::move(ga.trace);
            break;
        }
        }
        rec.evaluations = cost.evaluations() - before;
        rec.cost = cost(rec.assignment);

        const MmseEstimator& estimator = estimators.emplace_back(rec.assignment, stats, params);
        const ServingMap& map = maps.emplace_back(strongest_ue_selection(stats, rec.assignment));
        detectors.emplace_back(estimator, map, params, cfg.N);
        sinr.emplace_back(cfg.K);
        rec.nmse = estimator.nmse();
        rec.n_serving.resize(cfg.K);
        for (int k = 0; k < cfg.K; ++k) rec.n_serving[k] = static_cast<int>(map.serving[k].size());
        out.methods.push_back(std::move(rec));
    }

    const SeedTree realizations = seeds.child("realization");
    for (int r = 0; r < cfg.channel_realizations; ++r) {
        const SeedTree node = realizations.child(std::uint64_t(r));
        Rng channel_rng = node.child("channel").engine();
        const ChannelRealization h = sample_channel(stats, channel_rng);
        for (std::size_t m = 0; m < detectors.size(); ++m) {
            Rng noise_rng = node.child("pilot_noise").engine();
            const CMatrix y = synthesize_pilot_observation(h, out.methods[m].assignment, params, noise_rng);
            const RVector block_sinr = detectors[m].sinr(estimators[m].estimate(y));
            for (int k = 0; k < cfg.K; ++k) sinr[m][k].push_back(block_sinr(k));
        }
    }
    for (std::size_t m = 0; m < out.methods.size(); ++m) {
        MethodRecord& rec = out.methods[m];
        rec.se = RVector::Zero(cfg.K);
        for (int k = 0; k < cfg.K; ++k)
            if (rec.served(k)) rec.se(k) = se_ul(sinr[m][k], params.prelog());
    }
    return out;
}

namespace {

CampaignBlock run_block(const ScenarioConfig& cfg, const CampaignOptions& options) {
    CampaignBlock block;
    block.K = cfg.K;
    block.methods = cfg.pa_methods;
    const int n = cfg.mc_realizations;
    std::vector<std::optional<DropResult>> results(n);
    std::vector<std::optional<DropFailure>> failures(n);
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex log_mutex;
    const int step = std::max(1, n / 20);

    auto worker = [&] {
        while (true) {
            const int d = next.fetch_add(1);
            if (d >= n) return;
            try {
                results[d] = run_drop(cfg, d);
            } catch (const std::exception& e) {
                failures[d] = DropFailure{d, drop_seed(cfg.master_seed, d), e.what()};
                std::lock_guard lock(log_mutex);
                std::cerr << "drop " << d << " failed (seed " << failures[d]->seed << "): " << e.what() << "\n";
            }
            const int finished = ++done;
            if (options.progress && (finished % step == 0 || finished == n)) {
                std::lock_guard lock(log_mutex);
                std::cerr << "[K=" << cfg.K << "] " << finished << "/" << n << " drops\n";
            }
        }
    };
    const int threads = std::max(1, std::min(options.threads, n));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (int d = 0; d < n; ++d) {
        if (results[d]) block.drops.push_back(std::move(*results[d]));
        if (failures[d]) block.failures.push_back(std::move(*failures[d]));
    }
    return block;
}

} // namespace

CampaignResult run_campaign(const ScenarioConfig& cfg, const CampaignOptions& options) {
    CampaignResult result;
    result.config = cfg;
    result.sweep = !cfg.sweep_k.empty();
    const std::vector<int> ks = result.sweep ? cfg.sweep_k : std::vector<int>{cfg.K};
    for (int K : ks) {
        ScenarioConfig block_cfg = cfg;
        block_cfg.K = K;
        block_cfg.sweep_k.clear();
        block_cfg = validate_config(block_cfg);
        std::vector<std::string> notes;
        if (!genie_fits(block_cfg)) {
            const auto it = std::find(block_cfg.pa_methods.begin(), block_cfg.pa_methods.end(), PaMethod::genie);
            if (it != block_cfg.pa_methods.end()) {
                if (!result.sweep)
                    throw BudgetExceeded("genie search over " + std::to_string(block_cfg.tau_p) + "^" +
                                         std::to_string(K) + " assignments exceeds the budget; use --pa ga");
                block_cfg.pa_methods.erase(it);
                notes.push_back("genie skipped: search space exceeds the exhaustive budget");
                std::cerr << "K=" << K << ": " << notes.back() << "\n";
            }
        }
        if (block_cfg.pa_methods.empty()) throw std::runtime_error("no PA method left to run for K=" + std::to_string(K));
        CampaignBlock block = run_block(block_cfg, options);
        block.notes = std::move(notes);
        result.blocks.push_back(std::move(block));
    }
    return result;
}

OutputFormat parse_output_format(const std::string& text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "json") return OutputFormat::json;
    if (text == "both") return OutputFormat::both;
    throw std::invalid_argument("unknown output format: " + text);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

const char* const kMetrics[] = {"average_nmse", "max_nmse", "min_nmse", "nmse", "se", "min_se", "max_se", "sum_se"};

std::vector<double> metric_samples(const CampaignBlock& block, PaMethod method, const std::string& metric) {
    std::vector<double> out;
    for (const auto& drop : block.drops) {
        const MethodRecord& r = drop.record(method);
        if (metric == "average_nmse") out.push_back(r.average_nmse());
        else if (metric == "max_nmse") out.push_back(r.max_nmse());
        else if (metric == "min_nmse") out.push_back(r.min_nmse());
        else if (metric == "sum_se") out.push_back(r.sum_se());
        else if (metric == "min_se") out.push_back(r.min_se());
        else if (metric == "max_se") out.push_back(r.max_se());
        else if (metric == "nmse") out.insert(out.end(), r.nmse.begin(), r.nmse.end());
        else if (metric == "se") out.insert(out.end(), r.se.begin(), r.se.end());
        else throw std::invalid_argument("unknown metric " + metric);
    }
    return out;
}

nlohmann::json cdf_json(const std::vector<std::pair<double, double>>& cdf) {
    auto arr = nlohmann::json::array();
    for (const auto& [x, f] : cdf) arr.push_back({x, f});
    return arr;
}

} // namespace

nlohmann::json block_summary(const CampaignBlock& block) {
    nlohmann::json j;
    j["K"] = block.K;
    j["drops"] = block.drops.size();
    j["notes"] = block.notes;
    auto fails = nlohmann::json::array();
    for (const auto& f : block.failures) fails.push_back({{"drop_id", f.drop_id}, {"seed", f.seed}, {"message", f.message}});
    j["failures"] = std::move(fails);
    if (block.drops.empty()) return j;

    std::vector<double> los;
    int warnings = 0;
    for (const auto& d : block.drops) {
        los.push_back(d.los_fraction);
        warnings += d.quadrature_warnings;
    }
    j["los_fraction_mean"] = mean(los);
    j["quadrature_warnings"] = warnings;

    nlohmann::json methods = nlohmann::json::object();
    for (PaMethod m : block.methods) {
        nlohmann::json mj;
        std::vector<double> cost, evals, unserved;
        for (const auto& d : block.drops) {
            const MethodRecord& r = d.record(m);
            cost.push_back(r.cost);
            evals.push_back(double(r.evaluations));
            int u = 0;
            for (int k = 0; k < r.nmse.size(); ++k) u += r.served(k) ? 0 : 1;
            unserved.push_back(double(u) / double(r.nmse.size()));
        }
        mj["mean_cost"] = mean(cost);
        mj["mean_evaluations"] = mean(evals);
        mj["unserved_fraction"] = mean(unserved);
        nlohmann::json cdfs = nlohmann::json::object();
        for (const char* metric : kMetrics) {
            const auto samples = metric_samples(block, m, metric);
            mj[std::string("mean_") + metric] = mean(samples);
            cdfs[metric] = cdf_json(empirical_cdf(samples));
        }
        mj["cdf"] = std::move(cdfs);
        methods[std::string(to_string(m))] = std::move(mj);
    }
    j["methods"] = std::move(methods);
    return j;
}

nlohmann::json campaign_summary(const CampaignResult& result) {
    nlohmann::json j;
    j["config"] = config_to_json(result.config);
    j["sweep"] = result.sweep;
    j["failure_count"] = result.failure_count();
    auto blocks = nlohmann::json::array();
    for (const auto& b : result.blocks) blocks.push_back(block_summary(b));
    j["blocks"] = std::move(blocks);
    return j;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_block_csv(const CampaignBlock& block, const std::filesystem::path& dir, const std::string& suffix,
                     const WriteOptions& options) {
    {
        const auto path = dir / ("results" + suffix + ".csv");
        auto out = open_output(path);
        out << "drop_id,method,ue,nmse,se,served,n_serving_sas\n";
        for (const auto& d : block.drops)
            for (const auto& r : d.methods)
                for (int k = 0; k < r.nmse.size(); ++k)
                    out << d.drop_id << ',' << to_string(r.method) << ',' << k << ',' << format_double(r.nmse(k))
                        << ',' << format_double(r.se(k)) << ',' << (r.served(k) ? 1 : 0) << ',' << r.n_serving[k]
                        << '\n';
        finish(out, path);
    }
    {
        const auto path = dir / ("drops" + suffix + ".csv");
        auto out = open_output(path);
        out << "drop_id,seed,statistics_checksum,los_fraction,quadrature_warnings,shadow_jitter_steps\n";
        for (const auto& d : block.drops)
            out << d.drop_id << ',' << d.seed << ',' << d.checksum << ',' << format_double(d.los_fraction) << ','
                << d.quadrature_warnings << ',' << d.shadow_jitter_steps << '\n';
        finish(out, path);
    }
    const auto cdf_dir = suffix.empty() ? dir / "cdf" : dir / "cdf" / suffix.substr(1);
    std::filesystem::create_directories(cdf_dir);
    for (PaMethod m : block.methods) {
        for (const char* metric : kMetrics) {
            const auto path = cdf_dir / (std::string(metric) + "_" + std::string(to_string(m)) + ".csv");
            auto out = open_output(path);
            out << metric << ",cdf\n";
            for (const auto& [x, f] : empirical_cdf(metric_samples(block, m, metric)))
                out << format_double(x) << ',' << format_double(f) << '\n';
            finish(out, path);
        }
    }
    if (options.ga_trace &&
        std::find(block.methods.begin(), block.methods.end(), PaMethod::ga) != block.methods.end()) {
        const auto path = dir / ("ga_trace" + suffix + ".csv");
        auto out = open_output(path);
        out << "drop_id,iteration,best_cost\n";
        for (const auto& d : block.drops) {
            const auto& trace = d.record(PaMethod::ga).ga_trace;
            for (std::size_t i = 0; i < trace.size(); ++i)
                out << d.drop_id << ',' << i + 1 << ',' << format_double(trace[i]) << '\n';
        }
        finish(out, path);
    }
}

} // namespace

void write_results(const CampaignResult& result, const std::filesystem::path& dir, const WriteOptions& options) {
    std::size_t successful = 0;
    for (const auto& b : result.blocks) successful += b.drops.size();
    if (successful == 0) throw std::runtime_error("no successful drops");

    std::filesystem::create_directories(dir);
    if (options.format != OutputFormat::json) {
        for (const auto& b : result.blocks) {
            if (b.drops.empty()) continue;
            write_block_csv(b, dir, result.sweep ? "_K" + std::to_string(b.K) : "", options);
        }
        if (result.sweep) {
            const auto path = dir / "sweep.csv";
            auto out = open_output(path);
            out << "K,method,drops,mean_sum_se,mean_per_user_se,mean_min_se,mean_average_nmse\n";
            for (const auto& b : result.blocks) {
                if (b.drops.empty()) continue;
                for (PaMethod m : b.methods)
                    out << b.K << ',' << to_string(m) << ',' << b.drops.size() << ','
                        << format_double(mean(metric_samples(b, m, "sum_se"))) << ','
                        << format_double(mean(metric_samples(b, m, "se"))) << ','
                        << format_double(mean(metric_samples(b, m, "min_se"))) << ','
                        << format_double(mean(metric_samples(b, m, "average_nmse"))) << '\n';
            }
            finish(out, path);
        }
    }
    if (options.format != OutputFormat::csv) {
        const auto path = dir / "summary.json";
        auto out = open_output(path);
        out << campaign_summary(result).dump(2) << '\n';
        finish(out, path);
    }
}

} // namespace xlmimo
