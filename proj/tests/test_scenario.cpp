#include "doctest.h"

#include <cmath>

#include "xlmimo/scenario.hpp"

using namespace xlmimo;

namespace {

nlohmann::json table_config() {
    return nlohmann::json::parse(R"({
      "array": {"subarrays": 25, "antennas_per_subarray": 4, "length": 100.0, "height": 10.0},
      "users": {"count": 6, "height": 1.5, "power_dbm": 10.0, "cell_half_width": 100.0},
      "protocol": {"tau_p": 4, "tau_c": 200, "noise_power_dbm": -96.0},
      "propagation": {"wavelength": 0.125, "beta0": 8.9125e-4, "gamma": 4.0,
                      "sigma_phi_deg": 10.0, "sigma_theta_deg": 10.0}
    })");
}

std::string config_error_field(const nlohmann::json& doc) {
    try {
        config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

} // namespace

TEST_CASE("default parameter set is accepted and converted to linear units") {
    const ScenarioConfig cfg = config_from_json(table_config());
    CHECK(cfg.L == 25);
    CHECK(cfg.N == 4);
    CHECK(cfg.M() == 100);
    CHECK(cfg.tau_p == 4);
    CHECK(cfg.ue_power == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(cfg.noise_power == doctest::Approx(std::pow(10.0, -9.6)).epsilon(1e-14));
    CHECK(cfg.spacing() == doctest::Approx(0.0625));
    CHECK(cfg.spacing_over_wavelength() == doctest::Approx(0.5));
    CHECK(cfg.data_symbols() == 196);
    CHECK(cfg.sigma_phi == doctest::Approx(10.0 * M_PI / 180.0));
}

TEST_CASE("invalid values name the offending field") {
    SUBCASE("tau_p zero") {
        auto doc = table_config();
        doc["protocol"]["tau_p"] = 0;
        try {
            config_from_json(doc);
            FAIL("accepted tau_p = 0");
        } catch (const ConfigError& e) {
            CHECK(e.field() == "tau_p");
            CHECK(std::string(e.what()).find("tau_p must be >= 1") != std::string::npos);
        }
    }
    SUBCASE("elite larger than population") {
        auto doc = table_config();
        doc["ga"] = {{"population", 12}, {"elite", 13}};
        try {
            config_from_json(doc);
            FAIL("accepted elite > population");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("elite count exceeds population") != std::string::npos);
        }
    }
    SUBCASE("tau_p above tau_c") {
        auto doc = table_config();
        doc["protocol"]["tau_p"] = 300;
        CHECK(config_error_field(doc) == "tau_p");
    }
    SUBCASE("tau_u too large") {
        auto doc = table_config();
        doc["protocol"]["tau_u"] = 197;
        CHECK(config_error_field(doc) == "tau_u");
    }
    SUBCASE("non-positive wavelength") {
        auto doc = table_config();
        doc["propagation"]["wavelength"] = 0.0;
        CHECK(config_error_field(doc) == "wavelength");
    }
    SUBCASE("mutation probability out of range") {
        auto doc = table_config();
        doc["ga"] = {{"mutation_probability", 1.5}};
        CHECK(config_error_field(doc) == "ga.mutation_probability");
    }
    SUBCASE("unknown key") {
        auto doc = table_config();
        doc["users"]["colour"] = "red";
        CHECK(config_error_field(doc) == "users.colour");
    }
    SUBCASE("wrong type") {
        auto doc = table_config();
        doc["array"]["subarrays"] = "many";
        CHECK(config_error_field(doc) == "array.subarrays");
    }
    SUBCASE("fractional count") {
        auto doc = table_config();
        doc["users"]["count"] = 2.5;
        CHECK(config_error_field(doc) == "users.count");
    }
}

TEST_CASE("GA defaults follow the UE count") {
    ScenarioConfig cfg;
    cfg.K = 6;
    CHECK(cfg.ga_population() == 12);
    CHECK(cfg.ga_elite() == 6);
    cfg.K = 1;
    CHECK(cfg.ga_population() == 2);
    CHECK(cfg.ga_elite() == 2);
}

TEST_CASE("config survives a JSON round trip") {
    ScenarioConfig cfg = config_from_json(table_config());
    cfg.master_seed = 0xfedcba9876543210ULL;
    cfg.sweep_k = {12, 20};
    cfg.pa_methods = {PaMethod::ga, PaMethod::random};
    const ScenarioConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.sweep_k == cfg.sweep_k);
    CHECK(back.pa_methods == cfg.pa_methods);
    CHECK(back.ue_power == doctest::Approx(cfg.ue_power).epsilon(1e-13));
    CHECK(back.noise_power == doctest::Approx(cfg.noise_power).epsilon(1e-13));
    CHECK(back.sigma_theta == doctest::Approx(cfg.sigma_theta).epsilon(1e-13));
    CHECK(back.ga_population() == cfg.ga_population());
}

TEST_CASE("PA method parsing") {
    CHECK(parse_pa_methods("all").size() == 4);
    CHECK(parse_pa_methods("ga,greedy") == std::vector<PaMethod>{PaMethod::ga, PaMethod::greedy});
    CHECK_THROWS(parse_pa_methods("optimal"));
    for (auto m : {PaMethod::random, PaMethod::greedy, PaMethod::genie, PaMethod::ga})
        CHECK(parse_pa_method(to_string(m)) == m);
}

TEST_CASE("subarray layout") {
    ScenarioConfig cfg;
    Rng rng(7);
    const Topology topo = build_topology(cfg, rng);
    REQUIRE(topo.sa_positions.size() == 25);
    for (int l = 0; l < 25; ++l) {
        CHECK(topo.sa_positions[l].x() == 0.0);
        CHECK(topo.sa_positions[l].z() == 10.0);
        CHECK(topo.sa_positions[l].y() == doctest::Approx(-topo.sa_positions[24 - l].y()));
        if (l > 0) CHECK(topo.sa_positions[l].y() - topo.sa_positions[l - 1].y() == doctest::Approx(4.0));
    }

    cfg.L = 1;
    const Topology single = build_topology(cfg, rng);
    CHECK(single.sa_positions[0].norm() == doctest::Approx(10.0));
}

TEST_CASE("UE drops are uniform in the cell and reproducible") {
    ScenarioConfig cfg;
    cfg.K = 500;
    Rng a(42), b(42);
    const Topology t1 = build_topology(cfg, a);
    const Topology t2 = build_topology(cfg, b);
    for (int k = 0; k < cfg.K; ++k) {
        CHECK(t1.ue_positions[k] == t2.ue_positions[k]);
        CHECK(std::abs(t1.ue_positions[k].x()) <= 100.0);
        CHECK(std::abs(t1.ue_positions[k].y()) <= 100.0);
        CHECK(t1.ue_positions[k].z() == 1.5);
    }
}

TEST_CASE("link geometry examples") {
    Topology topo;
    topo.sa_positions = {Point3(0, 20, 10)};
    topo.ue_positions = {Point3(0, 20, 1.5), Point3(30, 60, 1.5), Point3(25, 20, 1.5)};
    const auto g = link_geometry(topo);
    CHECK(g(0, 0).distance == doctest::Approx(8.5));
    CHECK(g(0, 0).horizontal_distance == 0.0);
    CHECK(g(0, 0).azimuth == 0.0);
    CHECK(g(1, 0).horizontal_distance == doctest::Approx(50.0));
    CHECK(std::sin(g(1, 0).azimuth) == doctest::Approx(0.8));
    CHECK(g(2, 0).azimuth == 0.0);
    CHECK(g(2, 0).elevation == doctest::Approx(std::atan2(8.5, 25.0)));
}

TEST_CASE("geometry invariants on random drops") {
    ScenarioConfig cfg;
    cfg.K = 50;
    Rng rng(3);
    const Topology topo = build_topology(cfg, rng);
    const auto grid = link_geometry(topo);
    const double dz = cfg.sa_height - cfg.ue_height;
    for (const auto& g : grid) {
        CHECK(g.distance >= dz);
        CHECK(std::hypot(g.horizontal_distance, dz) == doctest::Approx(g.distance).epsilon(1e-12));
        CHECK(std::abs(g.azimuth) <= M_PI / 2);
        CHECK(g.elevation > 0.0);
        CHECK(g.elevation < M_PI / 2);
    }
}
