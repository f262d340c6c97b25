#include "mnmimo/channel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"

namespace mnmimo {

void check_geometry(const ArrayGeometry& g) {
    if (g.num_elements < 1) throw GeometryError("array needs at least one element");
    if (!(g.element_spacing > 0.0)) throw GeometryError("element spacing must be positive");
    if (g.dual_polarized && g.num_elements % 2 != 0)
        throw GeometryError(fmt::format(
            "dual-polarized array needs an even element count, got {}", g.num_elements));
}

std::array<double, 2> polarization_gains(const ArrayGeometry& g) {
    if (!g.dual_polarized) return {1.0, 0.0};
    const double r = db_to_linear(g.cross_pol_ratio_db);
    const double share0 = 2.0 / (1.0 + r);
    const double share1 = 2.0 * r / (1.0 + r);
    const auto projection = [](double slant_deg) {
        return std::sqrt(2.0) * std::abs(std::cos(slant_deg * kPi / 180.0));
    };
    return {projection(g.slant_deg[0]) * std::sqrt(share0),
            projection(g.slant_deg[1]) * std::sqrt(share1)};
}

CVector steering_vector(const ArrayGeometry& geometry, double angle_deg) {
    check_geometry(geometry);
    const std::size_t positions = geometry.num_positions();
    const double theta = (angle_deg - geometry.boresight_deg + 90.0) * kPi / 180.0;
    const double phase_step = 2.0 * kPi * geometry.element_spacing * std::cos(theta);
    const auto gains = polarization_gains(geometry);

    CVector a(static_cast<Eigen::Index>(geometry.num_elements));
    for (std::size_t q = 0; q < geometry.num_polarizations(); ++q)
        for (std::size_t k = 0; k < positions; ++k)
            a(static_cast<Eigen::Index>(q * positions + k)) =
                gains[q] * std::polar(1.0, phase_step * static_cast<double>(k));
    return a;
}

void check_profile(const TapProfile& profile) {
    if (profile.taps.empty()) throw ProfileError("tap profile is empty");
    double previous = 0.0;
    for (const auto& tap : profile.taps) {
        if (!(tap.delay_s >= 0.0) || !std::isfinite(tap.delay_s))
            throw ProfileError(fmt::format("negative tap delay {}", tap.delay_s));
        if (tap.delay_s < previous) throw ProfileError("tap delays must be non-decreasing");
        if (!std::isfinite(tap.power_db)) throw ProfileError("tap power must be finite");
        previous = tap.delay_s;
    }
}

std::vector<double> normalized_tap_powers(const TapProfile& profile) {
    check_profile(profile);
    std::vector<double> p;
    p.reserve(profile.taps.size());
    double total = 0.0;
    for (const auto& tap : profile.taps) {
        p.push_back(db_to_linear(tap.power_db));
        total += p.back();
    }
    for (auto& v : p) v /= total;
    return p;
}

std::size_t max_delay_samples(const TapProfile& profile, double sample_rate) {
    check_profile(profile);
    return static_cast<std::size_t>(std::llround(profile.taps.back().delay_s * sample_rate));
}

TapProfile default_profile() {
    TapProfile p;
    p.name = "cdl-a-like";
    for (int k = 0; k < 12; ++k) p.taps.push_back({k * 100e-9, -1.2 * k, std::nullopt});
    return p;
}

TapProfile flat_profile() {
    TapProfile p;
    p.name = "flat";
    p.taps.push_back({0.0, 0.0, std::nullopt});
    return p;
}

TapProfile two_tap_profile(double delay_s) {
    TapProfile p;
    p.name = "two-tap";
    p.taps.push_back({0.0, 0.0, std::nullopt});
    p.taps.push_back({delay_s, 0.0, std::nullopt});
    return p;
}

std::size_t ChannelRealization::max_delay() const noexcept {
    return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end());
}

ChannelRealization generate_realization(const TapProfile& profile, const ArrayGeometry& geometry,
                                        double user_angle_deg, std::uint64_t seed,
                                        const ChannelOptions& options) {
    check_geometry(geometry);
    const auto powers = normalized_tap_powers(profile);
    if (!(options.sample_rate > 0.0)) throw ProfileError("sample rate must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> offset(-options.angular_spread_deg,
                                                  options.angular_spread_deg);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

    const std::size_t taps = profile.taps.size();
    const std::size_t positions = geometry.num_positions();
    ChannelRealization ch;
    ch.gains.resize(static_cast<Eigen::Index>(taps),
                    static_cast<Eigen::Index>(geometry.num_elements));
    ch.delays.resize(taps);
    ch.sample_rate = options.sample_rate;
    ch.seed = seed;

    for (std::size_t i = 0; i < taps; ++i) {
        const auto& tap = profile.taps[i];
        // Always consume the same number of draws per tap.
        const double drawn = offset(rng);
        std::array<Complex, 2> fade{};
        for (auto& z : fade) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z = options.fading == Fading::Rayleigh ? Complex(re, im) : Complex(1.0, 0.0);
        }
        const double aod = user_angle_deg + tap.aod_offset_deg.value_or(drawn);
        const CVector a = steering_vector(geometry, aod);
        const double amp = std::sqrt(powers[i]);
        for (std::size_t q = 0; q < geometry.num_polarizations(); ++q)
            for (std::size_t k = 0; k < positions; ++k) {
                const auto m = static_cast<Eigen::Index>(q * positions + k);
                ch.gains(static_cast<Eigen::Index>(i), m) = amp * a(m) * fade[q];
            }
        ch.delays[i] = static_cast<std::size_t>(std::llround(tap.delay_s * options.sample_rate));
    }
    return ch;
}

ChannelRealization identity_channel(std::size_t num_antennas, double sample_rate) {
    ChannelRealization ch;
    ch.gains = CMatrix::Ones(1, static_cast<Eigen::Index>(num_antennas));
    ch.delays = {0};
    ch.sample_rate = sample_rate;
    return ch;
}

CMatrix frequency_response(const ChannelRealization& ch, const std::vector<double>& grid_hz) {
    const double nyquist = ch.sample_rate / 2.0;
    for (double f : grid_hz)
        if (std::abs(f) > nyquist)
            throw BandError(fmt::format("frequency {} Hz outside +-{} Hz", f, nyquist));

    CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(grid_hz.size()), ch.gains.cols());
    for (std::size_t j = 0; j < grid_hz.size(); ++j)
        for (std::size_t i = 0; i < ch.num_taps(); ++i) {
            const double tau = static_cast<double>(ch.delays[i]) / ch.sample_rate;
            const Complex rot = std::polar(1.0, -2.0 * kPi * grid_hz[j] * tau);
            h.row(static_cast<Eigen::Index>(j)) += rot * ch.gains.row(static_cast<Eigen::Index>(i));
        }
    return h;
}

} // namespace mnmimo
