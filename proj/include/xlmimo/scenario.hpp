#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "xlmimo/random.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo {

enum class PaMethod { random, greedy, genie, ga };

std::string_view to_string(PaMethod method);
PaMethod parse_pa_method(std::string_view name);
/// Accepts a single method name, "all", or a comma separated list.
std::vector<PaMethod> parse_pa_methods(std::string_view text);

enum class GreedyMetric { strongest_subarray, sum_over_subarrays };

/// Raised on any configuration invariant violation; `field()` names the offender.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct GaParams {
    int iterations = 15;
    std::optional<int> population;  // default 2K
    double mutation_probability = 0.02;
    std::optional<int> elite;       // default ceil(A/2), at least 2
};

/// All physical, protocol and algorithm parameters. Powers are linear (mW),
/// angles radians, lengths metres. Unset optionals resolve from other fields.
struct ScenarioConfig {
    // array
    int L = 25;
    int N = 4;
    double array_length = 100.0;
    double sa_height = 10.0;
    std::optional<double> antenna_spacing;  // default wavelength / 2

    // users
    int K = 6;
    double ue_height = 1.5;
    double ue_power = 10.0;
    double cell_half_width = 100.0;

    // protocol
    int tau_p = 4;
    int tau_c = 200;
    std::optional<int> tau_u;  // default tau_c - tau_p
    double noise_power = 2.5118864315095823e-10;  // -96 dBm

    // propagation
    double wavelength = 0.125;
    double beta0 = 8.9125e-4;
    double gamma = 4.0;
    double sigma_sf_los = 3.0;
    double sigma_sf_nlos = 4.0;
    double decorr_distance = 9.0;
    double sigma_phi = 0.17453292519943295;    // 10 degrees
    double sigma_theta = 0.17453292519943295;  // 10 degrees

    GaParams ga;

    // simulation
    int mc_realizations = 1000;      // statistics drops
    int channel_realizations = 100;  // coherence blocks per drop
    std::uint64_t master_seed = 1;
    int quadrature_points = 200;
    double quadrature_tolerance = 1e-4;
    double genie_budget = 1e6;
    std::vector<PaMethod> pa_methods{PaMethod::random, PaMethod::greedy, PaMethod::genie, PaMethod::ga};
    GreedyMetric greedy_metric = GreedyMetric::strongest_subarray;
    std::vector<int> sweep_k;

    int M() const { return L * N; }
    double spacing() const { return antenna_spacing.value_or(wavelength / 2.0); }
    double spacing_over_wavelength() const { return spacing() / wavelength; }
    int data_symbols() const { return tau_u.value_or(tau_c - tau_p); }
    int ga_population() const { return ga.population.value_or(2 * K); }
    int ga_elite() const;
};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// Checks every invariant and returns the config; throws ConfigError naming the field.
ScenarioConfig validate_config(ScenarioConfig raw);

/// Parses the nested JSON config (unknown keys are rejected), then validates.
ScenarioConfig config_from_json(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

struct Topology {
    std::vector<Point3> sa_positions;  // reference (first) antenna of each SA
    std::vector<Point3> ue_positions;
};

Topology build_topology(const ScenarioConfig& cfg, Rng& rng);

struct LinkGeometry {
    double distance = 0.0;             // 3-D, UE to first antenna of the SA
    double horizontal_distance = 0.0;
    double azimuth = 0.0;              // from array broadside (x-axis)
    double elevation = 0.0;
};

LinkGrid<LinkGeometry> link_geometry(const Topology& topo);

} // namespace xlmimo
