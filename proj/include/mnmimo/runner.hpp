#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mnmimo/analysis.hpp"
#include "mnmimo/channel.hpp"
#include "mnmimo/phy.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/scenario.hpp"

namespace mnmimo {

struct RunOptions {
    std::size_t jobs = 1;
};

struct ConstellationPoint {
    Complex received;
    Complex ideal;
    int user = 0;
    int symbol = 0;
};

struct ConstellationDump {
    std::size_t antennas = 0;
    PrecoderMethod method = PrecoderMethod::CB;
    double snr_db = 0.0;
    std::size_t drop = 0;
    std::vector<ConstellationPoint> points;
    std::optional<AntennaFrame> frame; // transmitted samples, when raw dumps are on
};

/// EVM of one drop, split per user and per OFDM symbol of the user's group.
struct DropEvm {
    Evm overall;                         // all users, all symbols
    std::vector<std::vector<Evm>> users; // [stacked user][symbol]
    std::vector<Evm> user_overall;
    std::vector<ConstellationPoint> points;
    std::optional<AntennaFrame> frame;
};

/// Full TX/RX chain for one drop: channels, precoders, per-group
/// modulation, superposition, per-user channel + noise, demodulation and
/// MMSE equalization with genie effective gains.
DropEvm simulate_drop_evm(const Scenario& scenario, std::size_t antennas, PrecoderMethod method,
                          double snr_db, std::uint64_t drop_seed, bool keep_points = false);

struct ConstellationResult {
    std::vector<MetricRecord> records;
    std::vector<ConstellationDump> dumps;
};

/// Per (antennas, method, snr, drop) EVM records. Record metrics:
/// "evm_pct"/"evm_db" with user/symbol = -1 for the drop total, user >= 0 and
/// symbol = -1 for a user total, both >= 0 per OFDM symbol.
ConstellationResult run_constellation(const Scenario& scenario, const RunOptions& options = {});

/// Capacities of one drop at one SNR, averaged over analysis subbands.
struct DropCapacity {
    double c_su = 0.0;
    std::vector<double> c_su_user;
    std::vector<double> c_mu;       // per method in scenario order
    std::vector<double> c_switched; // per method
};

/// One entry per scenario.snr_db point; channels are drawn once per drop.
std::vector<DropCapacity> simulate_drop_capacity(const Scenario& scenario, std::size_t antennas,
                                                 std::uint64_t drop_seed);

/// Channels of one drop: per stacked user, its realization and responses on
/// its own group's grid and on the group-0 grid. Seeds: user k uses
/// split_seed(drop_seed, k).
struct DropChannels {
    std::vector<ChannelRealization> realizations;
    UserGroupChannels own_grid;
    std::vector<CMatrix> fine_grid;
};

DropChannels draw_drop_channels(const Scenario& scenario, std::size_t antennas,
                                std::uint64_t drop_seed);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct CapacityRow {
    std::size_t antennas = 0;
    std::string method; // SU, CB or SLNR
    double snr_db = 0.0;
    std::size_t drops = 0;
    double c_mean = 0.0; // switched capacity for MU methods, C_SU for SU
    double c_std = 0.0;
    double c_mu_mean = 0.0; // NaN for SU
    double c_mu_std = 0.0;
};

struct GainRow {
    std::size_t antennas = 0;
    std::string method;
    double target_capacity = 0.0;
    double snr_su_db = 0.0;
    double snr_mu_db = 0.0;
    double gain_db = 0.0; // snr_su - snr_mu, NaN when a curve never reaches target
};

struct CapacityResult {
    std::vector<MetricRecord> records;
    std::vector<CapacityRow> rows;
    std::vector<GainRow> gains;
};

CapacityResult run_capacity_sweep(const Scenario& scenario, const RunOptions& options = {});

/// Output writers. CSV column orders are fixed; see README.md.
void write_capacity_outputs(const CapacityResult& result, const Scenario& scenario,
                            const std::filesystem::path& dir);
void write_constellation_outputs(const ConstellationResult& result, const Scenario& scenario,
                                 const std::filesystem::path& dir);

struct RunManifest {
    std::string command;
    std::string config_hash; // FNV-1a 64 of the config bytes, hex
    std::string tool_version;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> drop_seeds;
    std::string timestamp;
};

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const Scenario& scenario);
void write_manifest(const RunManifest& manifest, const Scenario& scenario,
                    const std::filesystem::path& dir);

std::string fnv1a_hex(const std::string& bytes);

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace mnmimo
