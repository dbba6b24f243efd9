#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "xlmimo/quadrature.hpp"
#include "xlmimo/random.hpp"
#include "xlmimo/scenario.hpp"
#include "xlmimo/types.hpp"

namespace xlmimo {

// ---------------------------------------------------------------------------
// Scalar kernels
// ---------------------------------------------------------------------------

/// Urban-micro LoS probability; equals 1 up to 18 m.
template <typename Real>
Real los_probability(Real distance) {
    if (!(distance > Real(0))) throw std::invalid_argument("los_probability: distance must be positive");
    const Real decay = std::exp(-distance / Real(36));
    const Real p = std::min(Real(18) / distance, Real(1)) * (Real(1) - decay) + decay;
    return std::clamp(p, Real(0), Real(1));
}

/// ULA response for a plane wave: entry n is exp(-j 2 pi n (d/lambda) sin(az) / cos(el)).
template <typename Real>
CVectorT<Real> array_response(Real azimuth, Real elevation, int antennas, Real spacing_over_wavelength) {
    const Real c = std::cos(elevation);
    if (std::abs(c) < Real(1e-9)) throw std::domain_error("array_response: elevation too close to +-pi/2");
    const Real phase = -Real(2) * std::numbers::pi_v<Real> * spacing_over_wavelength * std::sin(azimuth) / c;
    CVectorT<Real> a(antennas);
    for (int n = 0; n < antennas; ++n) a(n) = std::polar(Real(1), phase * Real(n));
    return a;
}

/// Marginal variance (dB^2) of the shadowing of a link at distance d.
template <typename Real>
Real shadow_variance(Real distance, Real decorr_distance, Real sigma_db) {
    const Real g = Real(1) - std::exp(-distance / decorr_distance);
    return sigma_db * sigma_db * g * g;
}

/// E{F_kl F_ij} for links (k,l) and (i,j).
/// d_kj: UE k to SA j, d_il: UE i to SA l, ue_distance: UE k to UE i, sa_distance: SA l to SA j.
template <typename Real>
Real shadow_covariance_entry(Real d_kl, Real d_ij, Real d_kj, Real d_il, Real ue_distance, Real sa_distance,
                             Real decorr_distance, Real sigma_db) {
    const Real e_kl = std::exp(-d_kl / decorr_distance);
    const Real e_ij = std::exp(-d_ij / decorr_distance);
    const Real scale = sigma_db * sigma_db / Real(2) * (Real(1) - e_kl) * (Real(1) - e_ij) /
                       std::sqrt((Real(1) + e_kl) * (Real(1) + e_ij));
    return scale * (std::exp(-d_kj / decorr_distance) + std::exp(-d_il / decorr_distance) +
                    std::exp(-ue_distance / decorr_distance) + std::exp(-sa_distance / decorr_distance));
}

// ---------------------------------------------------------------------------
// Spatial correlation by tensor Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

struct QuadratureSettings {
    int points = 200;          // working resolution per axis
    double tolerance = 1e-4;   // relative Frobenius change between levels
    int max_doublings = 2;
    double window_sigmas = 8.0;
};

struct QuadratureReport {
    int points = 0;
    double change = 0.0;
    bool converged = true;
};

namespace detail {

template <typename Real>
struct AxisRule {
    RVectorT<Real> nodes;
    RVectorT<Real> weights;  // quadrature weight times Gaussian density
};

template <typename Real>
AxisRule<Real> gaussian_axis(Real mean, Real sigma, Real lower, Real upper, int n, Real window) {
    AxisRule<Real> axis;
    if (sigma == Real(0)) {
        axis.nodes = RVectorT<Real>::Constant(1, mean);
        axis.weights = RVectorT<Real>::Ones(1);
        return axis;
    }
    const Real lo = std::max(lower, mean - window * sigma);
    const Real hi = std::min(upper, mean + window * sigma);
    if (!(hi > lo)) throw std::domain_error("spatial_correlation: angular window lies outside the integration box");
    const auto rule = gauss_legendre(n);
    const Real half = (hi - lo) / Real(2);
    const Real mid = (hi + lo) / Real(2);
    axis.nodes.resize(n);
    axis.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const Real x = mid + half * Real(rule->nodes(i));
        const Real z = (x - mean) / sigma;
        axis.nodes(i) = x;
        axis.weights(i) = Real(rule->weights(i)) * half * std::exp(-z * z / Real(2));
    }
    return axis;
}

/// First column r_delta = E{exp(-j 2 pi delta (d/lambda) sin(az)/cos(el))}, delta = 0..N-1,
/// with the angular density renormalized over the integration box.
template <typename Real>
CVectorT<Real> correlation_column(Real azimuth, Real elevation, Real sigma_az, Real sigma_el, int antennas,
                                  Real spacing_over_wavelength, int n, Real window) {
    constexpr Real pi = std::numbers::pi_v<Real>;
    const auto az = gaussian_axis<Real>(azimuth, sigma_az, -pi, pi, n, window);
    const auto el = gaussian_axis<Real>(elevation, sigma_el, -pi / Real(2), pi / Real(2), n, window);

    RVectorT<Real> sin_az = az.nodes.array().sin();
    RVectorT<Real> sec_el(el.nodes.size());
    for (Eigen::Index j = 0; j < el.nodes.size(); ++j) {
        const Real c = std::cos(el.nodes(j));
        if (std::abs(c) < Real(1e-12)) throw std::domain_error("spatial_correlation: elevation too close to +-pi/2");
        sec_el(j) = Real(1) / c;
    }

    const Real k = -Real(2) * pi * spacing_over_wavelength;
    CVectorT<Real> column = CVectorT<Real>::Zero(antennas);
    Real mass = 0;
    for (Eigen::Index i = 0; i < az.nodes.size(); ++i) {
        for (Eigen::Index j = 0; j < el.nodes.size(); ++j) {
            const Real w = az.weights(i) * el.weights(j);
            const std::complex<Real> step = std::polar(Real(1), k * sin_az(i) * sec_el(j));
            std::complex<Real> z(w, Real(0));
            column(0) += z;
            for (int d = 1; d < antennas; ++d) {
                z *= step;
                column(d) += z;
            }
            mass += w;
        }
    }
    if (!(mass > Real(0))) throw std::domain_error("spatial_correlation: zero angular mass in integration box");
    return column / mass;
}

template <typename Real>
CMatrixT<Real> hermitian_toeplitz(const CVectorT<Real>& column) {
    const auto n = column.size();
    CMatrixT<Real> r(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index c = 0; c < n; ++c) r(m, c) = m >= c ? column(m - c) : std::conj(column(c - m));
    return r;
}

template <typename Real>
Real toeplitz_norm(const CVectorT<Real>& column) {
    const auto n = column.size();
    Real s = Real(n) * std::norm(column(0));
    for (Eigen::Index d = 1; d < n; ++d) s += Real(2) * Real(n - d) * std::norm(column(d));
    return std::sqrt(s);
}

} // namespace detail

/// NLoS spatial correlation matrix for a local-scattering cluster centred on the LoS angles.
/// Hermitian Toeplitz, PSD by construction (non-negative quadrature weights).
template <typename Real>
CMatrixT<Real> spatial_correlation(Real beta_nlos, Real azimuth, Real elevation, Real sigma_az, Real sigma_el,
                                   int antennas, Real spacing_over_wavelength,
                                   const QuadratureSettings& settings = {}, QuadratureReport* report = nullptr) {
    if (sigma_az < Real(0) || sigma_el < Real(0)) throw std::invalid_argument("spatial_correlation: negative angular spread");
    const Real window = Real(settings.window_sigmas);
    QuadratureReport local;

    if (sigma_az == Real(0) && sigma_el == Real(0)) {
        const auto a = array_response<Real>(azimuth, elevation, antennas, spacing_over_wavelength);
        local.points = 1;
        if (report) *report = local;
        return beta_nlos * a * a.adjoint();
    }

    int n = std::max(2, settings.points / 2);
    CVectorT<Real> previous = detail::correlation_column<Real>(azimuth, elevation, sigma_az, sigma_el, antennas,
                                                               spacing_over_wavelength, n, window);
    CVectorT<Real> current = previous;
    const int max_points = settings.points << std::max(0, settings.max_doublings);
    local.converged = false;
    n = settings.points;
    while (true) {
        current = detail::correlation_column<Real>(azimuth, elevation, sigma_az, sigma_el, antennas,
                                                   spacing_over_wavelength, n, window);
        local.points = n;
        local.change = double(detail::toeplitz_norm<Real>(current - previous) / detail::toeplitz_norm<Real>(current));
        if (local.change < settings.tolerance) {
            local.converged = true;
            break;
        }
        if (n * 2 > max_points) break;
        previous = current;
        n *= 2;
    }
    if (report) *report = local;
    return beta_nlos * detail::hermitian_toeplitz<Real>(current);
}

// ---------------------------------------------------------------------------
// Per-drop statistics
// ---------------------------------------------------------------------------

using VisibilityMask = Eigen::MatrixXi;  // K x L, entries 0/1

VisibilityMask sample_visibility(const LinkGrid<LinkGeometry>& geometry, Rng& rng);

/// Shadow fading in dB for every link, K x L.
struct ShadowField {
    RMatrix db;
    RMatrix linear() const;
};

/// (KL) x (KL) cross-covariance, link index k * L + l.
RMatrix shadow_cross_covariance(const Topology& topo, const LinkGrid<LinkGeometry>& geometry,
                                double decorr_distance, double sigma_db);

/// Cholesky factor of a shadowing covariance with diagonal-jitter repair.
class ShadowSampler {
public:
    explicit ShadowSampler(const RMatrix& covariance);

    /// Draws one field; `scale` multiplies the standard deviation.
    ShadowField sample(Rng& rng, int num_ues, int num_subarrays, double scale = 1.0) const;

    int jitter_steps() const { return jitter_steps_; }
    double jitter() const { return jitter_; }

private:
    RMatrix factor_;
    int jitter_steps_ = 0;
    double jitter_ = 0.0;
};

ShadowField sample_shadowing(const RMatrix& covariance, int num_ues, int num_subarrays, Rng& rng);

struct LosComponent {
    double gain = 0.0;  // beta^LoS
    CVector response;   // h^LoS
};

LosComponent los_channel(const LinkGeometry& link, double shadow_linear, const ScenarioConfig& cfg);
double nlos_lsf(const LinkGeometry& link, double shadow_linear, const ScenarioConfig& cfg);

/// Hermitian square-root factor F with F F^H = A; negative eigenvalues clipped.
CMatrix psd_sqrt_factor(const CMatrix& a);

struct LinkStatistics {
    CVector mean;        // alpha * h^LoS
    CMatrix covariance;  // R
    CMatrix sqrt_factor;
    double beta_los = 0.0;
    double beta_nlos = 0.0;
    double beta = 0.0;
    bool los = false;
};

class ChannelStatistics {
public:
    ChannelStatistics() = default;
    ChannelStatistics(int num_ues, int num_subarrays, int antennas);

    int num_ues() const { return links_.num_ues(); }
    int num_subarrays() const { return links_.num_subarrays(); }
    int antennas() const { return antennas_; }

    LinkStatistics& link(int k, int l) { return links_(k, l); }
    const LinkStatistics& link(int k, int l) const { return links_(k, l); }

    RMatrix beta() const;
    RMatrix beta_nlos() const;
    double los_fraction() const;

    /// Content hash of means, covariances and gains; used to log pairing.
    std::uint64_t checksum() const;

    int quadrature_warnings = 0;

private:
    LinkGrid<LinkStatistics> links_;
    int antennas_ = 0;
};

ChannelStatistics channel_statistics(const LinkGrid<LinkGeometry>& geometry, const VisibilityMask& visibility,
                                     const ShadowField& los_shadow, const ShadowField& nlos_shadow,
                                     const ScenarioConfig& cfg);

/// Collective channels for one coherence block: column k stacks h_k1..h_kL.
struct ChannelRealization {
    CMatrix h;  // LN x K
    int antennas = 0;

    auto block(int k, int l) { return h.block(Eigen::Index(l) * antennas, k, antennas, 1); }
    auto block(int k, int l) const { return h.block(Eigen::Index(l) * antennas, k, antennas, 1); }
};

ChannelRealization sample_channel(const ChannelStatistics& stats, Rng& rng);

nlohmann::json statistics_to_json(const ChannelStatistics& stats);
ChannelStatistics statistics_from_json(const nlohmann::json& doc);
void save_statistics(const ChannelStatistics& stats, const std::filesystem::path& path);
ChannelStatistics load_statistics(const std::filesystem::path& path);

} // namespace xlmimo
