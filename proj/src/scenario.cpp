#include "mnmimo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "mnmimo/errors.hpp"
#include "mnmimo/log.hpp"

namespace mnmimo {

std::vector<std::size_t> Scenario::users_per_group() const {
    std::vector<std::size_t> k;
    for (const auto& a : user_angles_deg) k.push_back(a.size());
    return k;
}

std::size_t Scenario::total_users() const {
    std::size_t k = 0;
    for (const auto& a : user_angles_deg) k += a.size();
    return k;
}

double Scenario::occupancy() const {
    return static_cast<double>(used_subcarriers.front()) /
           static_cast<double>(numerologies.group(0).fft_size);
}

ArrayGeometry Scenario::geometry_for(std::size_t num_antennas) const {
    ArrayGeometry g = geometry;
    g.num_elements = num_antennas;
    return g;
}

namespace {

double auto_anchor(const std::vector<Numerology>& sorted, std::size_t used0) {
    const double widest = sorted.back().scs_hz;
    const double half = static_cast<double>(used0) * sorted.front().scs_hz / 2.0;
    return -std::floor(half / widest) * widest;
}

} // namespace

Scenario reference_scenario() {
    Scenario s;
    s.id = "reference";
    const std::vector<Numerology> groups{{15e3, 2048, 424, 14}, {30e3, 1024, 212, 14}};
    s.used_subcarriers = {576, 288};
    s.user_angles_deg = {{135.0}, {45.0}};
    s.numerologies = validate_numerology_set(groups, true, auto_anchor(groups, 576));
    s.antennas = {2, 8, 16};
    s.geometry = ArrayGeometry{};
    s.profile = default_profile();
    s.channel.sample_rate = s.numerologies.sample_rate();
    return s;
}

namespace {

ConfigError error_at(const YAML::Node& node, const std::string& what) {
    const auto mark = node.Mark();
    return ConfigError(what, mark.line, mark.column);
}

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw error_at(node, fmt::format("'{}' must be a mapping", where));
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!keys.count(key))
            throw error_at(kv.first, fmt::format("unknown key '{}' in '{}'", key, where));
    }
}

template <typename T>
T as(const YAML::Node& node, const std::string& what) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw error_at(node, fmt::format("'{}' has the wrong type", what));
    }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
    if (const auto node = parent[key]) out = as<T>(node, where + "." + key);
}

std::size_t read_count(const YAML::Node& node, const std::string& what) {
    const auto v = as<long long>(node, what);
    if (v < 0) throw error_at(node, fmt::format("'{}' must be non-negative", what));
    return static_cast<std::size_t>(v);
}

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const std::string& what) {
    if (node.IsScalar()) return {as<T>(node, what)};
    if (!node.IsSequence()) throw error_at(node, fmt::format("'{}' must be a list", what));
    std::vector<T> out;
    for (const auto& item : node) out.push_back(as<T>(item, what));
    return out;
}

struct GroupConfig {
    Numerology numerology;
    std::size_t used = 0;
    std::vector<double> angles;
    YAML::Node node;
};

void parse_numerology(const YAML::Node& root, Scenario& s) {
    const auto node = root["numerology"];
    if (!node) throw ConfigError("missing 'numerology' section");
    check_keys(node, "numerology", {"strict", "anchor_hz", "null_dc", "groups"});

    bool strict = true;
    read(node, "strict", strict, "numerology");
    read(node, "null_dc", s.null_dc, "numerology");

    const auto groups = node["groups"];
    if (!groups || !groups.IsSequence() || groups.size() == 0)
        throw error_at(node, "'numerology.groups' must be a non-empty list");

    std::vector<GroupConfig> configs;
    for (const YAML::Node& g : groups) {
        check_keys(g, "numerology.groups[]",
                   {"scs_hz", "fft_size", "cp_len", "symbols_per_subframe", "used_subcarriers",
                    "users_deg"});
        GroupConfig c;
        c.node = g;
        for (const char* required : {"scs_hz", "fft_size", "cp_len", "used_subcarriers"})
            if (!g[required]) throw error_at(g, fmt::format("group is missing '{}'", required));
        c.numerology.scs_hz = as<double>(g["scs_hz"], "scs_hz");
        c.numerology.fft_size = read_count(g["fft_size"], "fft_size");
        c.numerology.cp_len = read_count(g["cp_len"], "cp_len");
        if (g["symbols_per_subframe"])
            c.numerology.symbols_per_subframe =
                read_count(g["symbols_per_subframe"], "symbols_per_subframe");
        c.used = read_count(g["used_subcarriers"], "used_subcarriers");
        if (g["users_deg"]) c.angles = read_list<double>(g["users_deg"], "users_deg");
        for (double a : c.angles)
            if (a < 0.0 || a > 180.0)
                throw error_at(g["users_deg"], fmt::format("user angle {} outside [0, 180]", a));
        try {
            check_numerology(c.numerology);
        } catch (const Error& e) {
            throw error_at(g, e.what());
        }
        if (c.used == 0 || c.used > c.numerology.fft_size)
            throw error_at(g["used_subcarriers"], "used_subcarriers must be in [1, fft_size]");
        configs.push_back(std::move(c));
    }

    std::stable_sort(configs.begin(), configs.end(), [](const GroupConfig& a, const GroupConfig& b) {
        const auto& x = a.numerology;
        const auto& y = b.numerology;
        return std::tie(x.scs_hz, x.fft_size, x.cp_len, x.symbols_per_subframe) <
               std::tie(y.scs_hz, y.fft_size, y.cp_len, y.symbols_per_subframe);
    });

    std::vector<Numerology> numerologies;
    for (const auto& c : configs) numerologies.push_back(c.numerology);

    double anchor = auto_anchor(numerologies, configs.front().used);
    if (const auto a = node["anchor_hz"]; a && !(a.IsScalar() && a.Scalar() == "auto"))
        anchor = as<double>(a, "numerology.anchor_hz");

    try {
        s.numerologies = validate_numerology_set(numerologies, strict, anchor);
    } catch (const Error& e) {
        throw error_at(node, e.what());
    }
    for (auto& c : configs) {
        s.used_subcarriers.push_back(c.used);
        s.user_angles_deg.push_back(std::move(c.angles));
    }
    if (s.total_users() == 0) throw error_at(node, "no users configured");

    // Every used subcarrier must sit inside the Nyquist band of the shared rate.
    const double nyquist = s.numerologies.sample_rate() / 2.0;
    for (std::size_t t = 0; t < s.num_groups(); ++t) {
        const auto& n = s.numerologies.group(t);
        const double top = anchor + static_cast<double>(s.used_subcarriers[t] - 1) * n.scs_hz;
        if (anchor < -nyquist || top >= nyquist)
            throw error_at(node, fmt::format("group {} occupies [{}, {}] Hz, outside +-{} Hz", t,
                                             anchor, top, nyquist));
    }
}

void parse_array(const YAML::Node& root, Scenario& s) {
    const auto node = root["array"];
    if (!node) return;
    check_keys(node, "array",
               {"antennas", "spacing_wavelengths", "dual_polarized", "slant_deg",
                "cross_pol_ratio_db", "boresight_deg"});
    if (node["antennas"]) {
        s.antennas.clear();
        for (long long m : read_list<long long>(node["antennas"], "array.antennas")) {
            if (m < 1) throw error_at(node["antennas"], "antenna counts must be >= 1");
            s.antennas.push_back(static_cast<std::size_t>(m));
        }
    }
    read(node, "spacing_wavelengths", s.geometry.element_spacing, "array");
    read(node, "dual_polarized", s.geometry.dual_polarized, "array");
    read(node, "cross_pol_ratio_db", s.geometry.cross_pol_ratio_db, "array");
    read(node, "boresight_deg", s.geometry.boresight_deg, "array");
    if (node["slant_deg"]) {
        const auto slant = read_list<double>(node["slant_deg"], "array.slant_deg");
        if (slant.size() != 2) throw error_at(node["slant_deg"], "slant_deg needs two angles");
        s.geometry.slant_deg = {slant[0], slant[1]};
    }
    for (std::size_t m : s.antennas) {
        try {
            check_geometry(s.geometry_for(m));
        } catch (const Error& e) {
            throw error_at(node, e.what());
        }
    }
}

void parse_channel(const YAML::Node& root, Scenario& s) {
    s.profile = default_profile();
    s.channel.sample_rate = s.numerologies.sample_rate();
    const auto node = root["channel"];
    if (!node) return;
    check_keys(node, "channel", {"profile", "taps", "angular_spread_deg", "fading"});

    std::string profile = "cdl-a-like";
    read(node, "profile", profile, "channel");
    if (profile == "cdl-a-like") {
        s.profile = default_profile();
    } else if (profile == "flat") {
        s.profile = flat_profile();
    } else if (profile == "custom") {
        const auto taps = node["taps"];
        if (!taps || !taps.IsSequence())
            throw error_at(node, "custom profile needs a 'taps' list");
        s.profile = TapProfile{"custom", {}};
        for (const auto& t : taps) {
            check_keys(t, "channel.taps[]", {"delay_s", "power_db", "aod_offset_deg"});
            if (!t["delay_s"] || !t["power_db"])
                throw error_at(t, "tap needs 'delay_s' and 'power_db'");
            Tap tap;
            tap.delay_s = as<double>(t["delay_s"], "delay_s");
            tap.power_db = as<double>(t["power_db"], "power_db");
            if (t["aod_offset_deg"]) tap.aod_offset_deg = as<double>(t["aod_offset_deg"], "aod_offset_deg");
            s.profile.taps.push_back(tap);
        }
    } else {
        throw error_at(node["profile"], fmt::format("unknown profile '{}'", profile));
    }
    if (node["taps"] && profile != "custom")
        throw error_at(node["taps"], "'taps' is only valid with profile: custom");
    try {
        check_profile(s.profile);
    } catch (const Error& e) {
        throw error_at(node, e.what());
    }

    read(node, "angular_spread_deg", s.channel.angular_spread_deg, "channel");
    if (s.channel.angular_spread_deg < 0.0)
        throw error_at(node["angular_spread_deg"], "angular spread must be non-negative");
    if (node["fading"]) {
        const auto f = as<std::string>(node["fading"], "channel.fading");
        if (f == "rayleigh")
            s.channel.fading = Fading::Rayleigh;
        else if (f == "fixed")
            s.channel.fading = Fading::Fixed;
        else
            throw error_at(node["fading"], fmt::format("unknown fading '{}'", f));
    }
}

void parse_precoding(const YAML::Node& root, Scenario& s) {
    if (const auto node = root["precoding"]) {
        check_keys(node, "precoding", {"methods", "subband_size", "normalization"});
        if (node["methods"]) {
            s.methods.clear();
            for (const auto& m : read_list<std::string>(node["methods"], "precoding.methods")) {
                try {
                    s.methods.push_back(parse_precoder_method(m));
                } catch (const std::invalid_argument& e) {
                    throw error_at(node["methods"], e.what());
                }
            }
            if (s.methods.empty()) throw error_at(node["methods"], "no precoding methods");
        }
        if (node["subband_size"]) {
            s.subband_size = read_count(node["subband_size"], "precoding.subband_size");
            if (s.subband_size == 0) throw error_at(node["subband_size"], "subband_size must be >= 1");
        }
        if (node["normalization"]) {
            const auto n = as<std::string>(node["normalization"], "precoding.normalization");
            if (n == "unit_column")
                s.normalization = Normalization::UnitColumn;
            else if (n == "none")
                s.normalization = Normalization::None;
            else
                throw error_at(node["normalization"], fmt::format("unknown normalization '{}'", n));
        }
    }
    if (const auto node = root["resampling"]) {
        check_keys(node, "resampling", {"filter_len", "filter_kind"});
        if (node["filter_len"]) {
            s.filter_len = read_count(node["filter_len"], "resampling.filter_len");
            if (s.filter_len < 3 || s.filter_len % 2 == 0)
                throw error_at(node["filter_len"], "filter_len must be odd and >= 3");
        }
        if (node["filter_kind"] && as<std::string>(node["filter_kind"], "filter_kind") != "hann_sinc")
            throw error_at(node["filter_kind"], "only filter_kind: hann_sinc is supported");
    }
}

void parse_simulation(const YAML::Node& root, Scenario& s) {
    const auto node = root["simulation"];
    if (!node) return;
    check_keys(node, "simulation",
               {"snr_db", "drops", "master_seed", "constellation", "target_capacity", "dump_drops",
                "raw_samples"});
    if (node["snr_db"]) {
        s.snr_db = read_list<double>(node["snr_db"], "simulation.snr_db");
        if (s.snr_db.empty()) throw error_at(node["snr_db"], "empty SNR list");
        if (!std::is_sorted(s.snr_db.begin(), s.snr_db.end()))
            throw error_at(node["snr_db"], "SNR list must be ascending");
    }
    if (node["drops"]) {
        s.drops = read_count(node["drops"], "simulation.drops");
        if (s.drops == 0) throw error_at(node["drops"], "drops must be >= 1");
    }
    read(node, "master_seed", s.master_seed, "simulation");
    read(node, "target_capacity", s.target_capacity, "simulation");
    read(node, "raw_samples", s.raw_samples, "simulation");
    if (node["dump_drops"]) s.dump_drops = read_count(node["dump_drops"], "simulation.dump_drops");
    if (node["constellation"]) {
        try {
            s.constellation = parse_constellation(as<std::string>(node["constellation"], "constellation"));
        } catch (const std::invalid_argument& e) {
            throw error_at(node["constellation"], e.what());
        }
    }
}

} // namespace

Scenario parse_scenario(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.line, e.mark.column);
    }
    if (!root || !root.IsMap()) throw ConfigError("config must be a YAML mapping");
    check_keys(root, "<root>",
               {"id", "numerology", "array", "channel", "precoding", "resampling", "simulation",
                "output"});

    Scenario s;
    read(root, "id", s.id, "<root>");
    parse_numerology(root, s);
    parse_array(root, s);
    parse_channel(root, s);
    parse_precoding(root, s);
    parse_simulation(root, s);
    if (const auto out = root["output"]) {
        check_keys(out, "output", {"dir"});
        if (out["dir"]) s.output_dir = as<std::string>(out["dir"], "output.dir");
    }

    std::size_t min_cp = s.numerologies.group(0).cp_len;
    for (const auto& g : s.numerologies.groups()) min_cp = std::min(min_cp, g.cp_len);
    if (max_delay_samples(s.profile, s.channel.sample_rate) > min_cp)
        log::warn(fmt::format("channel delay spread exceeds the shortest CP ({} samples)", min_cp));
    for (std::size_t m : s.antennas)
        if (s.total_users() > m)
            log::warn(fmt::format("{} users on {} antennas", s.total_users(), m));
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

} // namespace mnmimo
