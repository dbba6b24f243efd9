#include "doctest.h"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "xlmimo/harness.hpp"
#include "xlmimo/statistics.hpp"

using namespace xlmimo;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.K = 4;
    cfg.L = 4;
    cfg.N = 2;
    cfg.tau_p = 2;
    cfg.mc_realizations = 3;
    cfg.channel_realizations = 4;
    cfg.master_seed = 11;
    return validate_config(cfg);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int line_count(const fs::path& p) {
    const std::string s = slurp(p);
    return int(std::count(s.begin(), s.end(), '\n'));
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("xlmimo_test_" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("drop seeds") {
    std::set<std::uint64_t> seen;
    for (int d = 0; d < 1000; ++d) seen.insert(drop_seed(5, d));
    CHECK(seen.size() == 1000);
    CHECK(drop_seed(5, 17) == drop_seed(5, 17));
    CHECK(drop_seed(5, 17) != drop_seed(6, 17));
}

TEST_CASE("one drop") {
    const ScenarioConfig cfg = small_config();
    const DropResult a = run_drop(cfg, 1);
    const DropResult b = run_drop(cfg, 1);
    REQUIRE(a.methods.size() == 4);
    CHECK(a.checksum == b.checksum);
    CHECK(a.checksum == drop_statistics(cfg, 1).stats.checksum());
    CHECK(a.seed == drop_seed(cfg.master_seed, 1));

    const double genie = a.record(PaMethod::genie).cost;
    for (std::size_t m = 0; m < a.methods.size(); ++m) {
        const MethodRecord& r = a.methods[m];
        CHECK(r.assignment == b.methods[m].assignment);
        CHECK(r.se == b.methods[m].se);
        CHECK(r.cost >= genie);
        CHECK(r.cost == doctest::Approx(r.nmse.sum()).epsilon(1e-12));
        for (int k = 0; k < cfg.K; ++k) {
            CHECK(r.nmse(k) >= 0.0);
            CHECK(r.nmse(k) <= 1.0);
            CHECK(r.se(k) >= 0.0);
            CHECK((r.se(k) > 0.0) == r.served(k));
        }
    }
    CHECK(a.record(PaMethod::genie).evaluations == 16);
    CHECK(a.record(PaMethod::ga).ga_trace.size() == std::size_t(cfg.ga.iterations));
    CHECK_THROWS(a.record(PaMethod::ga).served(cfg.K));
}

TEST_CASE("method results do not depend on which other methods run") {
    ScenarioConfig cfg = small_config();
    const DropResult all = run_drop(cfg, 2);
    cfg.pa_methods = {PaMethod::ga, PaMethod::random};
    const DropResult some = run_drop(cfg, 2);
    CHECK(some.checksum == all.checksum);
    for (PaMethod m : cfg.pa_methods) {
        CHECK(some.record(m).assignment == all.record(m).assignment);
        CHECK(some.record(m).se == all.record(m).se);
    }
}

TEST_CASE("identical assignments give identical results") {
    ScenarioConfig cfg = small_config();
    cfg.tau_p = 1;
    cfg.pa_methods = {PaMethod::random, PaMethod::greedy};
    const DropResult d = run_drop(cfg, 0);
    CHECK(d.methods[0].assignment == d.methods[1].assignment);
    CHECK(d.methods[0].se == d.methods[1].se);
}

TEST_CASE("campaign output") {
    const ScenarioConfig cfg = small_config();
    const CampaignResult result = run_campaign(cfg);
    REQUIRE(result.blocks.size() == 1);
    CHECK(result.blocks[0].drops.size() == 3);
    CHECK(result.failure_count() == 0);

    const fs::path dir = scratch("campaign");
    write_results(result, dir, WriteOptions{OutputFormat::both, true});
    CHECK(line_count(dir / "results.csv") == 1 + 3 * 4 * cfg.K);
    CHECK(line_count(dir / "drops.csv") == 1 + 3);
    CHECK(line_count(dir / "ga_trace.csv") == 1 + 3 * cfg.ga.iterations);
    CHECK_FALSE(fs::exists(dir / "sweep.csv"));

    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    const ScenarioConfig echo = config_from_json(summary.at("config"));
    CHECK(echo.master_seed == cfg.master_seed);
    CHECK(echo.K == cfg.K);
    CHECK(summary["blocks"][0]["drops"] == 3);
    CHECK(summary == campaign_summary(result));

    for (const char* m : {"random", "greedy", "genie", "ga"}) {
        const auto& cdf = summary["blocks"][0]["methods"][m]["cdf"]["se"];
        CHECK(cdf.size() >= 1);
        double prev_x = -1.0, prev_f = 0.0;
        for (const auto& point : cdf) {
            CHECK(point[0].get<double>() > prev_x);
            CHECK(point[1].get<double>() > prev_f);
            prev_x = point[0];
            prev_f = point[1];
        }
        CHECK(prev_f == 1.0);
        CHECK(fs::exists(dir / "cdf" / (std::string("min_se_") + m + ".csv")));
    }

    SUBCASE("byte-identical reruns across thread counts") {
        const fs::path again = scratch("campaign_again");
        write_results(run_campaign(cfg, CampaignOptions{2, false}), again, WriteOptions{OutputFormat::both, true});
        for (const char* f : {"results.csv", "drops.csv", "summary.json", "ga_trace.csv", "cdf/sum_se_ga.csv"})
            CHECK(slurp(dir / f) == slurp(again / f));
        fs::remove_all(again);
    }
    SUBCASE("json only") {
        const fs::path only = scratch("json_only");
        write_results(result, only, WriteOptions{OutputFormat::json, false});
        CHECK(fs::exists(only / "summary.json"));
        CHECK_FALSE(fs::exists(only / "results.csv"));
        fs::remove_all(only);
    }
    fs::remove_all(dir);
}

TEST_CASE("single drop gives a one-step CDF") {
    ScenarioConfig cfg = small_config();
    cfg.mc_realizations = 1;
    cfg.pa_methods = {PaMethod::greedy};
    const CampaignResult result = run_campaign(cfg);
    const auto j = block_summary(result.blocks[0]);
    const auto& cdf = j["methods"]["greedy"]["cdf"]["min_se"];
    REQUIRE(cdf.size() == 1);
    CHECK(cdf[0][1] == 1.0);
    CHECK(cdf[0][0].get<double>() == result.blocks[0].drops[0].record(PaMethod::greedy).min_se());
}

TEST_CASE("empty campaigns are rejected") {
    CampaignResult empty;
    empty.config = small_config();
    empty.blocks.push_back(CampaignBlock{});
    const fs::path dir = scratch("empty");
    CHECK_THROWS_WITH(write_results(empty, dir), "no successful drops");
    CHECK_FALSE(fs::exists(dir / "summary.json"));
}

TEST_CASE("exhaustive budget handling") {
    ScenarioConfig cfg = small_config();
    cfg.genie_budget = 10;
    cfg.mc_realizations = 1;
    CHECK_THROWS_AS(run_campaign(cfg), BudgetExceeded);

    cfg.sweep_k = {2, 4};
    const CampaignResult sweep = run_campaign(cfg);
    REQUIRE(sweep.blocks.size() == 2);
    CHECK(sweep.blocks[0].methods.size() == 4);
    CHECK(sweep.blocks[0].notes.empty());
    CHECK(sweep.blocks[1].methods.size() == 3);
    CHECK(sweep.blocks[1].notes.size() == 1);

    const fs::path dir = scratch("sweep");
    write_results(sweep, dir, WriteOptions{OutputFormat::csv, false});
    CHECK(line_count(dir / "sweep.csv") == 1 + 4 + 3);
    CHECK(line_count(dir / "results_K2.csv") == 1 + 4 * 2);
    CHECK(fs::exists(dir / "cdf" / "K4" / "se_ga.csv"));
    fs::remove_all(dir);
}

TEST_CASE("summary statistics helpers") {
    const auto cdf = empirical_cdf({3.0, 1.0, 3.0, 2.0});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair(1.0, 0.25));
    CHECK(cdf[1] == std::pair(2.0, 0.5));
    CHECK(cdf[2] == std::pair(3.0, 1.0));
    CHECK(mean({1.0, 2.0, 6.0}) == 3.0);

    CHECK(binomial_upper_tail(10, 0) == doctest::Approx(1.0));
    CHECK(binomial_upper_tail(10, 10) == doctest::Approx(1.0 / 1024));
    CHECK(binomial_upper_tail(10, 8) == doctest::Approx(56.0 / 1024));
    const SignTest t = sign_test_greater({3, 3, 3, 1, 2}, {1, 1, 1, 1, 3});
    CHECK(t.wins == 3);
    CHECK(t.losses == 1);
    CHECK(t.ties == 1);
    CHECK(t.p_value == doctest::Approx(5.0 / 16));

    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
