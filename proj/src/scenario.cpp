#include "xlmimo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace xlmimo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError(field, field + ": " + message);
}

void require_positive(double value, const std::string& field) {
    if (!(value > 0.0) || !std::isfinite(value)) fail(field, "must be strictly positive");
}

void require_non_negative(double value, const std::string& field) {
    if (!(value >= 0.0) || !std::isfinite(value)) fail(field, "must be non-negative");
}

// Walks one section, rejecting keys that are not consumed.
class Section {
public:
    Section(const nlohmann::json& doc, std::string name) : name_(std::move(name)) {
        if (doc.contains(name_)) {
            node_ = &doc.at(name_);
            if (!node_->is_object()) fail(name_, "section must be an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out) {
        if (const auto* v = find(key)) out = convert<T>(*v, key);
    }

    template <typename T>
    void read(const char* key, std::optional<T>& out) {
        if (const auto* v = find(key)) {
            if (v->is_null()) out.reset();
            else out = convert<T>(*v, key);
        }
    }

    template <typename Fn>
    void read_with(const char* key, Fn&& fn) {
        if (const auto* v = find(key)) fn(*v, path(key));
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items()) {
            if (!seen_.count(key)) fail(name_ + "." + key, "unknown configuration key");
        }
    }

private:
    std::string path(const char* key) const { return name_ + "." + key; }

    const nlohmann::json* find(const char* key) {
        seen_.insert(key);
        if (!node_ || !node_->contains(key)) return nullptr;
        return &node_->at(key);
    }

    template <typename T>
    T convert(const nlohmann::json& v, const char* key) const {
        try {
            if constexpr (std::is_integral_v<T>) {
                if (!v.is_number()) throw std::invalid_argument("not a number");
                if (v.is_number_integer()) {
                    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned())
                        throw std::invalid_argument("negative");
                    return v.get<T>();
                }
                const double d = v.get<double>();
                if (std::floor(d) != d) throw std::invalid_argument("not an integer");
                return static_cast<T>(d);
            } else {
                return v.get<T>();
            }
        } catch (const std::exception&) {
            fail(path(key), "has the wrong type");
        }
    }

    std::string name_;
    const nlohmann::json* node_ = nullptr;
    std::set<std::string> seen_;
};

} // namespace

std::string_view to_string(PaMethod method) {
    switch (method) {
    case PaMethod::random: return "random";
    case PaMethod::greedy: return "greedy";
    case PaMethod::genie: return "genie";
    case PaMethod::ga: return "ga";
    }
    return "unknown";
}

PaMethod parse_pa_method(std::string_view name) {
    if (name == "random") return PaMethod::random;
    if (name == "greedy") return PaMethod::greedy;
    if (name == "genie") return PaMethod::genie;
    if (name == "ga") return PaMethod::ga;
    fail("pa_method", "unknown method '" + std::string(name) + "' (expected random|greedy|genie|ga|all)");
}

std::vector<PaMethod> parse_pa_methods(std::string_view text) {
    if (text == "all") return {PaMethod::random, PaMethod::greedy, PaMethod::genie, PaMethod::ga};
    std::vector<PaMethod> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto method = parse_pa_method(token);
        if (std::find(out.begin(), out.end(), method) == out.end()) out.push_back(method);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

int ScenarioConfig::ga_elite() const {
    if (ga.elite) return *ga.elite;
    const int population = ga_population();
    return std::max(2, (population + 1) / 2);
}

ScenarioConfig validate_config(ScenarioConfig cfg) {
    if (cfg.L < 1) fail("L", "must be >= 1");
    if (cfg.N < 1) fail("N", "must be >= 1");
    if (cfg.K < 1) fail("K", "must be >= 1");
    if (cfg.tau_p < 1) fail("tau_p", "tau_p must be >= 1");
    if (cfg.tau_c < 1) fail("tau_c", "must be >= 1");
    if (cfg.tau_p > cfg.tau_c) fail("tau_p", "tau_p must not exceed tau_c");
    if (cfg.tau_u && *cfg.tau_u < 0) fail("tau_u", "must be non-negative");
    if (cfg.data_symbols() > cfg.tau_c - cfg.tau_p) fail("tau_u", "tau_u must not exceed tau_c - tau_p");

    require_positive(cfg.array_length, "array_length");
    require_positive(cfg.sa_height, "sa_height");
    require_positive(cfg.ue_height, "ue_height");
    if (cfg.sa_height == cfg.ue_height) fail("ue_height", "must differ from sa_height");
    require_positive(cfg.wavelength, "wavelength");
    require_positive(cfg.spacing(), "antenna_spacing");
    require_positive(cfg.ue_power, "ue_power");
    require_positive(cfg.noise_power, "noise_power");
    require_positive(cfg.beta0, "beta0");
    require_positive(cfg.cell_half_width, "cell_half_width");
    require_positive(cfg.decorr_distance, "decorr_distance");
    require_positive(cfg.gamma, "gamma");
    require_non_negative(cfg.sigma_sf_los, "sigma_sf_los");
    require_non_negative(cfg.sigma_sf_nlos, "sigma_sf_nlos");
    require_non_negative(cfg.sigma_phi, "sigma_phi");
    require_non_negative(cfg.sigma_theta, "sigma_theta");

    if (cfg.ga.iterations < 1) fail("ga.iterations", "must be >= 1");
    if (cfg.ga_population() < 2) fail("ga.population", "must be >= 2");
    if (!(cfg.ga.mutation_probability >= 0.0 && cfg.ga.mutation_probability <= 1.0))
        fail("ga.mutation_probability", "must lie in [0, 1]");
    if (cfg.ga_elite() > cfg.ga_population()) fail("ga.elite", "elite count exceeds population");
    if (cfg.ga_elite() < 2) fail("ga.elite", "must be >= 2");

    if (cfg.mc_realizations < 1) fail("mc_realizations", "must be >= 1");
    if (cfg.channel_realizations < 1) fail("channel_realizations", "must be >= 1");
    if (cfg.quadrature_points < 2) fail("quadrature_points", "must be >= 2");
    require_positive(cfg.quadrature_tolerance, "quadrature_tolerance");
    if (!(cfg.genie_budget >= 1.0)) fail("genie_budget", "must be >= 1");
    if (cfg.pa_methods.empty()) fail("pa_method", "at least one method is required");
    for (int k : cfg.sweep_k)
        if (k < 1) fail("sweep_k", "entries must be >= 1");
    return cfg;
}

ScenarioConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) fail("config", "top level must be an object");
    static const std::set<std::string> sections{"array", "users", "protocol", "propagation", "ga", "simulation"};
    for (const auto& [key, value] : doc.items())
        if (!sections.count(key)) fail(key, "unknown configuration section");

    ScenarioConfig cfg;

    Section array(doc, "array");
    array.read("subarrays", cfg.L);
    array.read("antennas_per_subarray", cfg.N);
    array.read("length", cfg.array_length);
    array.read("height", cfg.sa_height);
    array.read("antenna_spacing", cfg.antenna_spacing);
    array.finish();

    Section users(doc, "users");
    users.read("count", cfg.K);
    users.read("height", cfg.ue_height);
    users.read_with("power_dbm", [&](const nlohmann::json& v, const std::string& field) {
        if (!v.is_number()) fail(field, "has the wrong type");
        cfg.ue_power = dbm_to_mw(v.get<double>());
    });
    users.read("cell_half_width", cfg.cell_half_width);
    users.finish();

    Section protocol(doc, "protocol");
    protocol.read("tau_p", cfg.tau_p);
    protocol.read("tau_c", cfg.tau_c);
    protocol.read("tau_u", cfg.tau_u);
    protocol.read_with("noise_power_dbm", [&](const nlohmann::json& v, const std::string& field) {
        if (!v.is_number()) fail(field, "has the wrong type");
        cfg.noise_power = dbm_to_mw(v.get<double>());
    });
    protocol.finish();

    Section prop(doc, "propagation");
    prop.read("wavelength", cfg.wavelength);
    prop.read("beta0", cfg.beta0);
    prop.read("gamma", cfg.gamma);
    prop.read("sigma_sf_los_db", cfg.sigma_sf_los);
    prop.read("sigma_sf_nlos_db", cfg.sigma_sf_nlos);
    prop.read("decorrelation_distance", cfg.decorr_distance);
    double sigma_phi_deg = cfg.sigma_phi / kDeg;
    double sigma_theta_deg = cfg.sigma_theta / kDeg;
    prop.read("sigma_phi_deg", sigma_phi_deg);
    prop.read("sigma_theta_deg", sigma_theta_deg);
    cfg.sigma_phi = sigma_phi_deg * kDeg;
    cfg.sigma_theta = sigma_theta_deg * kDeg;
    prop.finish();

    Section ga(doc, "ga");
    ga.read("iterations", cfg.ga.iterations);
    ga.read("population", cfg.ga.population);
    ga.read("mutation_probability", cfg.ga.mutation_probability);
    ga.read("elite", cfg.ga.elite);
    ga.finish();

    Section sim(doc, "simulation");
    sim.read("drops", cfg.mc_realizations);
    sim.read("channel_realizations", cfg.channel_realizations);
    sim.read("seed", cfg.master_seed);
    sim.read("quadrature_points", cfg.quadrature_points);
    sim.read("quadrature_tolerance", cfg.quadrature_tolerance);
    sim.read("genie_budget", cfg.genie_budget);
    sim.read_with("pa_method", [&](const nlohmann::json& v, const std::string& field) {
        if (!v.is_string()) fail(field, "has the wrong type");
        cfg.pa_methods = parse_pa_methods(v.get<std::string>());
    });
    sim.read_with("greedy_metric", [&](const nlohmann::json& v, const std::string& field) {
        const auto name = v.is_string() ? v.get<std::string>() : std::string{};
        if (name == "strongest_subarray") cfg.greedy_metric = GreedyMetric::strongest_subarray;
        else if (name == "sum_over_subarrays") cfg.greedy_metric = GreedyMetric::sum_over_subarrays;
        else fail(field, "expected strongest_subarray|sum_over_subarrays");
    });
    sim.read("sweep_k", cfg.sweep_k);
    sim.finish();

    return validate_config(std::move(cfg));
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("cannot parse config file '" + path.string() + "': " + e.what());
    }
    return config_from_json(doc);
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    std::string method_list;
    for (std::size_t i = 0; i < cfg.pa_methods.size(); ++i)
        method_list += (i ? "," : "") + std::string(to_string(cfg.pa_methods[i]));

    nlohmann::json doc;
    doc["array"] = {{"subarrays", cfg.L},
                    {"antennas_per_subarray", cfg.N},
                    {"length", cfg.array_length},
                    {"height", cfg.sa_height},
                    {"antenna_spacing", cfg.spacing()}};
    doc["users"] = {{"count", cfg.K},
                    {"height", cfg.ue_height},
                    {"power_dbm", mw_to_dbm(cfg.ue_power)},
                    {"cell_half_width", cfg.cell_half_width}};
    doc["protocol"] = {{"tau_p", cfg.tau_p},
                       {"tau_c", cfg.tau_c},
                       {"tau_u", cfg.data_symbols()},
                       {"noise_power_dbm", mw_to_dbm(cfg.noise_power)}};
    doc["propagation"] = {{"wavelength", cfg.wavelength},
                          {"beta0", cfg.beta0},
                          {"gamma", cfg.gamma},
                          {"sigma_sf_los_db", cfg.sigma_sf_los},
                          {"sigma_sf_nlos_db", cfg.sigma_sf_nlos},
                          {"decorrelation_distance", cfg.decorr_distance},
                          {"sigma_phi_deg", cfg.sigma_phi / kDeg},
                          {"sigma_theta_deg", cfg.sigma_theta / kDeg}};
    doc["ga"] = {{"iterations", cfg.ga.iterations},
                 {"population", cfg.ga_population()},
                 {"mutation_probability", cfg.ga.mutation_probability},
                 {"elite", cfg.ga_elite()}};
    doc["simulation"] = {{"drops", cfg.mc_realizations},
                         {"channel_realizations", cfg.channel_realizations},
                         {"seed", cfg.master_seed},
                         {"quadrature_points", cfg.quadrature_points},
                         {"quadrature_tolerance", cfg.quadrature_tolerance},
                         {"genie_budget", cfg.genie_budget},
                         {"pa_method", method_list},
                         {"greedy_metric", cfg.greedy_metric == GreedyMetric::strongest_subarray
                                               ? "strongest_subarray"
                                               : "sum_over_subarrays"},
                         {"sweep_k", cfg.sweep_k}};
    return doc;
}

Topology build_topology(const ScenarioConfig& cfg, Rng& rng) {
    Topology topo;
    topo.sa_positions.reserve(cfg.L);
    const double pitch = cfg.array_length / cfg.L;
    for (int l = 0; l < cfg.L; ++l)
        topo.sa_positions.emplace_back(0.0, -cfg.array_length / 2.0 + (l + 0.5) * pitch, cfg.sa_height);

    std::uniform_real_distribution<double> uniform(-cfg.cell_half_width, cfg.cell_half_width);
    topo.ue_positions.reserve(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        const double x = uniform(rng);
        const double y = uniform(rng);
        topo.ue_positions.emplace_back(x, y, cfg.ue_height);
    }
    return topo;
}

LinkGrid<LinkGeometry> link_geometry(const Topology& topo) {
    const int K = static_cast<int>(topo.ue_positions.size());
    const int L = static_cast<int>(topo.sa_positions.size());
    LinkGrid<LinkGeometry> grid(K, L);
    for (int k = 0; k < K; ++k) {
        const Point3& ue = topo.ue_positions[k];
        for (int l = 0; l < L; ++l) {
            const Point3& sa = topo.sa_positions[l];
            const double dx = ue.x() - sa.x();
            const double dy = ue.y() - sa.y();
            const double dz = sa.z() - ue.z();
            LinkGeometry& g = grid(k, l);
            g.horizontal_distance = std::hypot(dx, dy);
            g.distance = std::hypot(g.horizontal_distance, dz);
            g.azimuth = g.horizontal_distance > 0.0
                            ? std::asin(std::clamp(dy / g.horizontal_distance, -1.0, 1.0))
                            : 0.0;
            g.elevation = std::atan2(dz, g.horizontal_distance);
        }
    }
    return grid;
}

} // namespace xlmimo
