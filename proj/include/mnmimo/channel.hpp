#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mnmimo/types.hpp"

namespace mnmimo {

/// Uniform linear array, optionally dual-polarized.
///
/// Dual-polarized arrays hold num_elements / 2 positions. Element m maps to
/// polarization m / (M/2) and position m % (M/2), i.e. all positions of the
/// first slant come first.
struct ArrayGeometry {
    std::size_t num_elements = 2;
    double element_spacing = 0.5; // wavelengths
    bool dual_polarized = true;
    std::array<double, 2> slant_deg{45.0, -45.0};
    double cross_pol_ratio_db = 0.0; // power of slant 1 relative to slant 0
    double boresight_deg = 90.0;

    std::size_t num_positions() const noexcept {
        return dual_polarized ? num_elements / 2 : num_elements;
    }
    std::size_t num_polarizations() const noexcept { return dual_polarized ? 2 : 1; }
};

void check_geometry(const ArrayGeometry& g);

/// Amplitude gain of each polarization as seen by the vertical omni receive
/// antenna: sqrt(2)|cos(slant)| weighted by the cross-pol power split.
/// Both entries are 1 for the default +-45 degree equal-power array.
std::array<double, 2> polarization_gains(const ArrayGeometry& g);

/// ULA response exp(i 2 pi d k cos(angle)) per position, replicated per
/// polarization and scaled by polarization_gains(). Angles are measured so
/// that geometry.boresight_deg is broadside.
CVector steering_vector(const ArrayGeometry& geometry, double angle_deg);

struct Tap {
    double delay_s = 0.0;
    double power_db = 0.0;
    /// Fixed departure-angle offset from the user direction. When empty the
    /// offset is drawn per realization from the angular spread.
    std::optional<double> aod_offset_deg;
};

struct TapProfile {
    std::string name;
    std::vector<Tap> taps;
};

/// Throws ProfileError on an empty profile, negative or decreasing delays.
void check_profile(const TapProfile& profile);

/// Linear tap powers normalized to sum to one.
std::vector<double> normalized_tap_powers(const TapProfile& profile);

/// Largest tap delay once quantized to the sample grid.
std::size_t max_delay_samples(const TapProfile& profile, double sample_rate);

/// Multi-tap exponential-decay profile shipped as the default ("CDL-A-like").
/// Not the standardized table: twelve taps 100 ns apart decaying 1.2 dB/tap.
TapProfile default_profile();
TapProfile flat_profile();
/// Two equal-power taps, the second `delay_s` after the first.
TapProfile two_tap_profile(double delay_s);

enum class Fading {
    Rayleigh, // one CN(0,1) scalar per tap and polarization
    Fixed,    // unit scalars: deterministic line-of-sight phases only
};

struct ChannelOptions {
    double sample_rate = 30.72e6;
    double angular_spread_deg = 5.0; // half-width of the uniform AoD offset
    Fading fading = Fading::Rayleigh;
};

/// Time-domain MISO channel of one user: gains(tap, antenna) at integer
/// sample delays.
struct ChannelRealization {
    CMatrix gains;
    std::vector<std::size_t> delays;
    double sample_rate = 0.0;
    std::uint64_t seed = 0;

    std::size_t num_taps() const noexcept { return delays.size(); }
    std::size_t num_antennas() const noexcept { return static_cast<std::size_t>(gains.cols()); }
    std::size_t max_delay() const noexcept;
};

/// Draws one realization. Random draws happen in a fixed order (per tap: AoD
/// offset, then one fading scalar per polarization slot) that does not depend
/// on the array size, so the same seed gives paired channels for every M.
ChannelRealization generate_realization(const TapProfile& profile, const ArrayGeometry& geometry,
                                        double user_angle_deg, std::uint64_t seed,
                                        const ChannelOptions& options = {});

/// Single zero-delay tap with unit gain on every antenna.
ChannelRealization identity_channel(std::size_t num_antennas, double sample_rate);

/// Row j is h(f_j) = sum_taps gain_tap exp(-i 2 pi f_j delay_tap), f in Hz
/// relative to the carrier. Throws BandError if |f| exceeds sample_rate / 2.
CMatrix frequency_response(const ChannelRealization& ch, const std::vector<double>& grid_hz);

} // namespace mnmimo
