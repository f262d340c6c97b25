#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mnmimo/numerology.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/types.hpp"

namespace mnmimo {

struct Evm {
    double percent = 0.0;
    double db = 0.0;
};

inline constexpr double kEvmFloorDb = -200.0;

/// RMS(received - ideal) / RMS(ideal). Throws LengthError, EmptyError.
Evm evm(std::span<const Complex> received, std::span<const Complex> ideal);

/// Per-user per-subband SINR from subband-averaged powers:
///
///   SINR_k = snr * S_k / (1 + snr * I_k),
///   S_k = mean_j |h_k(j) p_k(j)|^2 s^2,  I_k = mean_j sum_{m != k} |h_k(j) p_m(j)|^2 s^2
///
/// where s = precoders.stream_scale, h_k(j) is row j of channels[k] on the
/// group-0 grid and p_m(j) the column serving user m at that frequency.
/// Result is [user][subband] with subbands of `analysis_subband` fine-grid
/// subcarriers. `channels` are in stacked order.
std::vector<std::vector<double>> mu_sinr(const std::vector<CMatrix>& channels,
                                         const PrecoderSet& precoders, const NumerologySet& set,
                                         const std::vector<std::size_t>& users_per_group,
                                         double snr_linear, std::size_t analysis_subband);

/// Mean over each analysis subband of |h_k(j) p(j)|^2 for a single-user
/// beamformer p serving user k at full power. [user][subband].
std::vector<std::vector<double>> su_beamforming_gain(const std::vector<CMatrix>& channels,
                                                     const PrecoderSet& cb_precoders,
                                                     const NumerologySet& set,
                                                     const std::vector<std::size_t>& users_per_group,
                                                     std::size_t analysis_subband);

/// max_k log2(1 + snr |h_k|^2).
double capacity_su(std::span<const CVector> users, double snr_linear);
/// max_k log2(1 + snr g_k) for beamforming power gains g_k.
double capacity_su_from_gains(std::span<const double> gains, double snr_linear);
/// sum_k log2(1 + sinr_k).
double capacity_mu(std::span<const double> sinrs);
/// mean over subbands of max(c_su, c_mu).
double capacity_switched(std::span<const std::pair<double, double>> su_mu);

/// Maps a fine-grid (group-0) subcarrier index to group t's grid index.
std::size_t coarse_index(const NumerologySet& set, std::size_t t, std::size_t fine_j);

struct MetricRecord {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t antennas = 0;
    double snr_db = 0.0;
    std::string method; // CB, SLNR or SU
    std::string metric; // e.g. "c_mu", "evm_db"
    int user = -1;      // -1 when not per user
    int symbol = -1;    // OFDM symbol index within the time unit, -1 for all
    double value = 0.0;
};

struct SummaryKey {
    std::string scenario;
    std::size_t antennas = 0;
    std::string method;
    std::string metric;
    int user = -1;
    int symbol = -1;
    double snr_db = 0.0;

    auto operator<=>(const SummaryKey&) const = default;
};

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation, 0 for a single record
    double median = 0.0;
};

/// Mean, sample std and median per key across seeds, in key order.
/// Throws EmptyError for no records.
std::map<SummaryKey, SummaryStats> aggregate(std::span<const MetricRecord> records);

/// SNR (dB) at which a capacity curve first reaches `target`, by linear
/// interpolation between sweep points; NaN when never reached.
double snr_at_capacity(std::span<const double> snr_db, std::span<const double> capacity,
                       double target);

} // namespace mnmimo
