#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mnmimo/channel.hpp"
#include "mnmimo/numerology.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/qam.hpp"

namespace mnmimo {

/// Everything one simulation run needs. Produced from the YAML config; see
/// README.md for the schema.
struct Scenario {
    std::string id = "scenario";

    NumerologySet numerologies;
    std::vector<std::size_t> used_subcarriers;        // per group
    std::vector<std::vector<double>> user_angles_deg; // per group, per user
    bool null_dc = false;

    std::vector<std::size_t> antennas{16}; // swept array sizes
    ArrayGeometry geometry;                // num_elements replaced per sweep point
    TapProfile profile;
    ChannelOptions channel;

    std::vector<PrecoderMethod> methods{PrecoderMethod::CB, PrecoderMethod::SLNR};
    std::size_t subband_size = 48;
    Normalization normalization = Normalization::UnitColumn;
    std::size_t filter_len = 33;

    std::vector<double> snr_db{50.0};
    std::size_t drops = 100;
    std::uint64_t master_seed = 1;
    Constellation constellation = Constellation::QAM16;
    double target_capacity = 6.0; // bits/s/Hz, for SNR-gain readout
    std::size_t dump_drops = 1;   // constellation dumps written for the first n drops
    bool raw_samples = false;     // also dump transmitted antenna samples for those drops

    std::filesystem::path output_dir = "out";

    std::size_t num_groups() const noexcept { return used_subcarriers.size(); }
    std::vector<std::size_t> users_per_group() const;
    std::size_t total_users() const;
    /// Occupied fraction of the band: used subcarriers of group 0 over its FFT size.
    double occupancy() const;
    ArrayGeometry geometry_for(std::size_t num_antennas) const;
};

/// Two groups as in the reference table: 15 kHz / 2048 / 424 with one user
/// at 135 degrees and 30 kHz / 1024 / 212 with one user at 45 degrees,
/// 576 and 288 used subcarriers, default tap profile.
Scenario reference_scenario();

/// Parses YAML text. Unknown keys, wrong types and invalid values raise
/// ConfigError carrying the line and column of the offending node.
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

} // namespace mnmimo
