#include "xlmimo/channel.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace xlmimo {

VisibilityMask sample_visibility(const LinkGrid<LinkGeometry>& geometry, Rng& rng) {
    const int K = geometry.num_ues();
    const int L = geometry.num_subarrays();
    VisibilityMask mask(K, L);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) mask(k, l) = uniform(rng) < los_probability(geometry(k, l).distance) ? 1 : 0;
    return mask;
}

RMatrix ShadowField::linear() const {
    return (db.array() * (std::log(10.0) / 10.0)).exp().matrix();
}

RMatrix shadow_cross_covariance(const Topology& topo, const LinkGrid<LinkGeometry>& geometry,
                                double decorr_distance, double sigma_db) {
    const int K = geometry.num_ues();
    const int L = geometry.num_subarrays();
    const Eigen::Index n = Eigen::Index(K) * L;
    RMatrix cov(n, n);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const Eigen::Index row = Eigen::Index(k) * L + l;
            const double d_kl = geometry(k, l).distance;
            for (int i = 0; i < K; ++i) {
                const double ue_distance = (topo.ue_positions[k] - topo.ue_positions[i]).norm();
                for (int j = 0; j < L; ++j) {
                    const Eigen::Index col = Eigen::Index(i) * L + j;
                    if (col < row) continue;
                    const double sa_distance = (topo.sa_positions[l] - topo.sa_positions[j]).norm();
                    const double value = shadow_covariance_entry(d_kl, geometry(i, j).distance, geometry(k, j).distance,
                                                                 geometry(i, l).distance, ue_distance, sa_distance,
                                                                 decorr_distance, sigma_db);
                    cov(row, col) = value;
                    cov(col, row) = value;
                }
            }
        }
    }
    return cov;
}

ShadowSampler::ShadowSampler(const RMatrix& covariance) {
    if (covariance.rows() != covariance.cols()) throw std::invalid_argument("shadow covariance must be square");
    const Eigen::Index n = covariance.rows();
    const double max_diag = n > 0 ? covariance.diagonal().maxCoeff() : 0.0;
    if (!(max_diag > 0.0)) {
        factor_ = RMatrix::Zero(n, n);
        return;
    }
    // attempt 0 is the raw matrix; attempts 1..4 add 1e-10, 1e-9, 1e-8, 1e-7 times the max diagonal
    double eps = 1e-10 * max_diag;
    RMatrix work = covariance;
    for (int attempt = 0; attempt <= 4; ++attempt) {
        if (attempt > 0) {
            work = covariance;
            work.diagonal().array() += eps;
            jitter_steps_ = attempt;
            jitter_ = eps;
            eps *= 10.0;
        }
        Eigen::LLT<RMatrix> llt(work);
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            return;
        }
    }
    throw std::runtime_error("shadow covariance factorization failed after jitter escalation");
}

ShadowField ShadowSampler::sample(Rng& rng, int num_ues, int num_subarrays, double scale) const {
    const Eigen::Index n = Eigen::Index(num_ues) * num_subarrays;
    if (n != factor_.rows()) throw std::invalid_argument("shadow sampler dimension mismatch");
    std::normal_distribution<double> normal(0.0, 1.0);
    RVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    RVector f = factor_.triangularView<Eigen::Lower>() * z;
    f *= scale;
    ShadowField field;
    field.db.resize(num_ues, num_subarrays);
    for (int k = 0; k < num_ues; ++k)
        for (int l = 0; l < num_subarrays; ++l) field.db(k, l) = f(Eigen::Index(k) * num_subarrays + l);
    return field;
}

ShadowField sample_shadowing(const RMatrix& covariance, int num_ues, int num_subarrays, Rng& rng) {
    return ShadowSampler(covariance).sample(rng, num_ues, num_subarrays);
}

LosComponent los_channel(const LinkGeometry& link, double shadow_linear, const ScenarioConfig& cfg) {
    LosComponent out;
    out.gain = cfg.beta0 * shadow_linear / (link.distance * link.distance);
    const cdouble phase = std::polar(1.0, -2.0 * std::numbers::pi * link.distance / cfg.wavelength);
    out.response = (std::sqrt(out.gain) * phase) *
                   array_response(link.azimuth, link.elevation, cfg.N, cfg.spacing_over_wavelength());
    return out;
}

double nlos_lsf(const LinkGeometry& link, double shadow_linear, const ScenarioConfig& cfg) {
    return cfg.beta0 * shadow_linear / std::pow(link.distance, cfg.gamma);
}

CMatrix psd_sqrt_factor(const CMatrix& a) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(a);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const RVector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

ChannelStatistics::ChannelStatistics(int num_ues, int num_subarrays, int antennas)
    : links_(num_ues, num_subarrays), antennas_(antennas) {}

RMatrix ChannelStatistics::beta() const {
    RMatrix out(num_ues(), num_subarrays());
    for (int k = 0; k < num_ues(); ++k)
        for (int l = 0; l < num_subarrays(); ++l) out(k, l) = link(k, l).beta;
    return out;
}

RMatrix ChannelStatistics::beta_nlos() const {
    RMatrix out(num_ues(), num_subarrays());
    for (int k = 0; k < num_ues(); ++k)
        for (int l = 0; l < num_subarrays(); ++l) out(k, l) = link(k, l).beta_nlos;
    return out;
}

double ChannelStatistics::los_fraction() const {
    if (links_.size() == 0) return 0.0;
    std::size_t count = 0;
    for (const auto& s : links_) count += s.los ? 1 : 0;
    return double(count) / double(links_.size());
}

namespace {

struct Hasher {
    std::uint64_t state = 0x84222325cbf29ce4ULL;
    void add(std::uint64_t v) { state = detail::splitmix64(state ^ v); }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
    void add(const cdouble& v) {
        add(v.real());
        add(v.imag());
    }
};

} // namespace

std::uint64_t ChannelStatistics::checksum() const {
    Hasher h;
    h.add(std::uint64_t(num_ues()));
    h.add(std::uint64_t(num_subarrays()));
    h.add(std::uint64_t(antennas_));
    for (const auto& s : links_) {
        h.add(s.beta_los);
        h.add(s.beta_nlos);
        h.add(s.beta);
        h.add(std::uint64_t(s.los));
        for (Eigen::Index i = 0; i < s.mean.size(); ++i) h.add(s.mean(i));
        for (Eigen::Index i = 0; i < s.covariance.size(); ++i) h.add(s.covariance.data()[i]);
    }
    return h.state;
}

ChannelStatistics channel_statistics(const LinkGrid<LinkGeometry>& geometry, const VisibilityMask& visibility,
                                     const ShadowField& los_shadow, const ShadowField& nlos_shadow,
                                     const ScenarioConfig& cfg) {
    const int K = geometry.num_ues();
    const int L = geometry.num_subarrays();
    const RMatrix x_los = los_shadow.linear();
    const RMatrix x_nlos = nlos_shadow.linear();
    QuadratureSettings settings;
    settings.points = cfg.quadrature_points;
    settings.tolerance = cfg.quadrature_tolerance;

    ChannelStatistics stats(K, L, cfg.N);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            const LinkGeometry& g = geometry(k, l);
            LinkStatistics& s = stats.link(k, l);
            s.los = visibility(k, l) != 0;
            const LosComponent los = los_channel(g, x_los(k, l), cfg);
            s.beta_los = los.gain;
            s.beta_nlos = nlos_lsf(g, x_nlos(k, l), cfg);
            s.beta = (s.los ? s.beta_los : 0.0) + s.beta_nlos;
            s.mean = s.los ? los.response : CVector::Zero(cfg.N);
            QuadratureReport report;
            s.covariance = spatial_correlation(s.beta_nlos, g.azimuth, g.elevation, cfg.sigma_phi, cfg.sigma_theta,
                                               cfg.N, cfg.spacing_over_wavelength(), settings, &report);
            if (!report.converged) ++stats.quadrature_warnings;
            s.sqrt_factor = psd_sqrt_factor(s.covariance);
        }
    }
    return stats;
}

ChannelRealization sample_channel(const ChannelStatistics& stats, Rng& rng) {
    const int K = stats.num_ues();
    const int L = stats.num_subarrays();
    const int N = stats.antennas();
    ChannelRealization out;
    out.antennas = N;
    out.h.resize(Eigen::Index(L) * N, K);
    CVector z(N);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            for (int n = 0; n < N; ++n) z(n) = complex_normal(rng);
            const LinkStatistics& s = stats.link(k, l);
            out.block(k, l) = s.mean + s.sqrt_factor * z;
        }
    }
    return out;
}

namespace {

nlohmann::json complex_array(const cdouble* data, Eigen::Index n) {
    auto arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < n; ++i) arr.push_back({data[i].real(), data[i].imag()});
    return arr;
}

void read_complex_array(const nlohmann::json& arr, cdouble* data, Eigen::Index n) {
    if (!arr.is_array() || Eigen::Index(arr.size()) != n) throw std::runtime_error("statistics: array size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) data[i] = {arr[i].at(0).get<double>(), arr[i].at(1).get<double>()};
}

} // namespace

nlohmann::json statistics_to_json(const ChannelStatistics& stats) {
    nlohmann::json doc;
    doc["K"] = stats.num_ues();
    doc["L"] = stats.num_subarrays();
    doc["N"] = stats.antennas();
    doc["quadrature_warnings"] = stats.quadrature_warnings;
    auto links = nlohmann::json::array();
    for (int k = 0; k < stats.num_ues(); ++k) {
        for (int l = 0; l < stats.num_subarrays(); ++l) {
            const LinkStatistics& s = stats.link(k, l);
            // column-major covariance, matching Eigen storage
            links.push_back({{"k", k},
                             {"l", l},
                             {"los", s.los},
                             {"beta_los", s.beta_los},
                             {"beta_nlos", s.beta_nlos},
                             {"beta", s.beta},
                             {"mean", complex_array(s.mean.data(), s.mean.size())},
                             {"covariance", complex_array(s.covariance.data(), s.covariance.size())}});
        }
    }
    doc["links"] = std::move(links);
    return doc;
}

ChannelStatistics statistics_from_json(const nlohmann::json& doc) {
    const int K = doc.at("K").get<int>();
    const int L = doc.at("L").get<int>();
    const int N = doc.at("N").get<int>();
    ChannelStatistics stats(K, L, N);
    stats.quadrature_warnings = doc.value("quadrature_warnings", 0);
    const auto& links = doc.at("links");
    if (links.size() != std::size_t(K) * std::size_t(L)) throw std::runtime_error("statistics: link count mismatch");
    for (const auto& entry : links) {
        const int k = entry.at("k").get<int>();
        const int l = entry.at("l").get<int>();
        if (k < 0 || k >= K || l < 0 || l >= L) throw std::runtime_error("statistics: link index out of range");
        LinkStatistics& s = stats.link(k, l);
        s.los = entry.at("los").get<bool>();
        s.beta_los = entry.at("beta_los").get<double>();
        s.beta_nlos = entry.at("beta_nlos").get<double>();
        s.beta = entry.at("beta").get<double>();
        s.mean.resize(N);
        read_complex_array(entry.at("mean"), s.mean.data(), N);
        s.covariance.resize(N, N);
        read_complex_array(entry.at("covariance"), s.covariance.data(), Eigen::Index(N) * N);
        s.sqrt_factor = psd_sqrt_factor(s.covariance);
    }
    return stats;
}

void save_statistics(const ChannelStatistics& stats, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << statistics_to_json(stats).dump();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ChannelStatistics load_statistics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return statistics_from_json(nlohmann::json::parse(in));
}

} // namespace xlmimo
