// Monte-Carlo campaign driver.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "xlmimo/channel.hpp"
#include "xlmimo/harness.hpp"
#include "xlmimo/scenario.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (item.empty()) throw std::invalid_argument("empty entry in list '" + text + "'");
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument("not an integer: " + item);
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uplink XL-MIMO pilot assignment Monte-Carlo simulator"};
    std::string config_path;
    std::optional<std::string> pa;
    std::optional<int> drops, realizations, K, L, tau_p;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> sweep_k;
    std::string out_dir = "results";
    std::string format = "both";
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::optional<std::string> dump_statistics;
    bool ga_trace = false;
    bool quiet = false;

    app.add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--pa", pa, "random|greedy|genie|ga|all, or a comma separated list");
    app.add_option("--drops", drops, "number of statistics drops");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--sweep-k", sweep_k, "comma separated UE counts for a K sweep");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "csv|json|both")->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--realizations", realizations, "channel realizations per drop");
    app.add_option("-K,--ues", K, "number of UEs");
    app.add_option("-L,--subarrays", L, "number of subarrays");
    app.add_option("--tau-p", tau_p, "pilot length");
    app.add_option("--dump-statistics", dump_statistics, "write the channel statistics of drop 0 to this JSON file");
    app.add_flag("--ga-trace", ga_trace, "write the GA best-cost trace per drop");
    app.add_flag("-q,--quiet", quiet, "no progress output");

    CLI11_PARSE(app, argc, argv);

    try {
        xlmimo::ScenarioConfig cfg = xlmimo::load_config(config_path);
        if (pa) cfg.pa_methods = xlmimo::parse_pa_methods(*pa);
        if (drops) cfg.mc_realizations = *drops;
        if (seed) cfg.master_seed = *seed;
        if (sweep_k) cfg.sweep_k = parse_int_list(*sweep_k);
        if (realizations) cfg.channel_realizations = *realizations;
        if (K) cfg.K = *K;
        if (L) cfg.L = *L;
        if (tau_p) cfg.tau_p = *tau_p;
        cfg = xlmimo::validate_config(cfg);

        if (dump_statistics) {
            xlmimo::save_statistics(xlmimo::drop_statistics(cfg, 0).stats, *dump_statistics);
        }

        xlmimo::CampaignOptions options;
        options.threads = threads;
        options.progress = !quiet;
        const auto result = xlmimo::run_campaign(cfg, options);

        xlmimo::WriteOptions write;
        write.format = xlmimo::parse_output_format(format);
        write.ga_trace = ga_trace;
        xlmimo::write_results(result, out_dir, write);

        const int failures = result.failure_count();
        if (failures > 0) {
            std::cerr << failures << " drop(s) failed; see summary for seeds\n";
            return 2;
        }
        return 0;
    } catch (const xlmimo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
