#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mnmimo/channel.hpp"
#include "mnmimo/numerology.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/qam.hpp"
#include "mnmimo/types.hpp"

namespace mnmimo {

/// Payload of one group for one time unit. symbols[u] is (p_t x used) with
/// row s holding OFDM symbol s of user u.
struct GroupPayload {
    std::vector<CMatrix> symbols;
};

/// Per group payloads plus the constellation they were drawn from.
struct PayloadGrid {
    Constellation constellation = Constellation::QAM16;
    std::vector<GroupPayload> groups;
};

/// Uniform random payload for every user of every group.
PayloadGrid random_payload(const NumerologySet& set, const std::vector<std::size_t>& users_per_group,
                           const std::vector<std::size_t>& used_per_group, Constellation c,
                           std::uint64_t seed);

/// Placement of a group's used subcarriers inside its FFT.
struct GroupLayout {
    std::size_t group = 0;
    std::size_t used = 0;
    bool null_dc = false; // zero the subcarrier that lands on bin 0
};

/// M complex streams of one time unit. samples(m, n).
struct AntennaFrame {
    CMatrix samples;
    double sample_rate = 0.0;

    std::size_t num_antennas() const noexcept { return static_cast<std::size_t>(samples.rows()); }
    std::size_t length() const noexcept { return static_cast<std::size_t>(samples.cols()); }
};

/// Precodes and OFDM-modulates the p_t symbols of one group.
///
/// For used subcarrier j the frequency-domain antenna vector is
/// stream_scale * P_t(SB(j)) * s_j. The IFFT is scaled by 1/sqrt(used) so a
/// unit-power payload gives K_t / K_total average transmit power per sample
/// summed over antennas. Returns M x p_t(N_t + L_t).
CMatrix modulate_group(const GroupPayload& payload, const PrecoderSet& precoders,
                       const NumerologySet& set, const GroupLayout& layout);

/// Elementwise sum of per-group blocks. Throws LengthError on mismatch.
AntennaFrame superpose(const std::vector<CMatrix>& group_streams, double sample_rate);

/// Noise variance per time-domain sample for a target in-band SNR: with unit
/// total transmit power occupying the fraction `occupancy` of the band, each
/// demodulated subcarrier then sees noise variance 1/snr.
double noise_variance_per_sample(double snr_db, double occupancy);

/// y[n] = sum_taps sum_m gain(tap, m) x_m[n - d_tap] + w[n], w ~ CN(0, noise_var).
///
/// Samples before the frame are zero unless `previous` (the prior frame, same
/// antennas) is given, in which case its tail is carried into the
/// convolution. Throws DelayError when a tap reaches past the frame.
CVector apply_channel(const AntennaFrame& frame, const ChannelRealization& ch, double noise_var,
                      std::uint64_t seed, const AntennaFrame* previous = nullptr);

/// Drops the CP and DFTs each of the p_t symbols; returns (p_t x used)
/// frequency-domain observations with the transmitter's scaling undone.
CMatrix demodulate_user(const CVector& y, const NumerologySet& set, const GroupLayout& layout);

/// Scalar MMSE: conj(g) y / (|g|^2 + noise_var). Zero gain gives zero.
Complex equalize(Complex obs, Complex g_eff, double noise_var);

/// Per-subcarrier noise variance seen after demodulate_user().
double demodulated_noise_variance(double noise_var_per_sample, const NumerologySet& set,
                                  const GroupLayout& layout);

/// Raw sample dump, one file per antenna:
///   bytes 0..7   magic "MNSAMP01"
///   bytes 8..15  sample rate, float64 little-endian
///   bytes 16..23 sample count, uint64 little-endian
///   then count interleaved (re, im) float64 little-endian pairs.
/// Files are named <prefix>_ant<m>.bin.
std::vector<std::filesystem::path> write_sample_dump(const AntennaFrame& frame,
                                                     const std::filesystem::path& dir,
                                                     const std::string& prefix);

struct SampleDump {
    double sample_rate = 0.0;
    CVector samples;
};

SampleDump read_sample_dump(const std::filesystem::path& file);

} // namespace mnmimo
