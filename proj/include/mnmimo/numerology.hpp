#pragma once

#include <cstddef>
#include <vector>

namespace mnmimo {

/// One OFDM waveform variant: subcarrier spacing, FFT size and CP length.
struct Numerology {
    double scs_hz = 15e3;
    std::size_t fft_size = 2048;
    std::size_t cp_len = 0;
    std::size_t symbols_per_subframe = 14;

    std::size_t symbol_samples() const noexcept { return fft_size + cp_len; }

    friend bool operator==(const Numerology&, const Numerology&) = default;
};

/// Throws NumerologyError unless fft_size is a power of two >= 2,
/// cp_len < fft_size and scs_hz > 0.
void check_numerology(const Numerology& n);

/// A validated, sorted collection of numerology groups sharing one time unit.
///
/// Group 0 has the smallest subcarrier spacing (longest symbol). Group t fits
/// exactly p_t symbols into one time unit of N_0 + L_0 samples. Instances are
/// only produced by validate_numerology_set().
class NumerologySet {
public:
    const std::vector<Numerology>& groups() const noexcept { return groups_; }
    const Numerology& group(std::size_t t) const { return groups_.at(t); }
    std::size_t size() const noexcept { return groups_.size(); }

    const std::vector<std::size_t>& p_factors() const noexcept { return p_; }
    std::size_t p_factor(std::size_t t) const { return p_.at(t); }

    bool strict() const noexcept { return strict_; }

    /// Frequency of the lowest-indexed used subcarrier, common to all groups.
    double anchor_hz() const noexcept { return anchor_hz_; }

    /// Shared DAC rate, scs_0 * N_0.
    double sample_rate() const noexcept;

    /// True when p_t * N_t == N_0 for every group.
    bool spacing_multiples() const noexcept;

private:
    friend NumerologySet validate_numerology_set(std::vector<Numerology>, bool, double);

    std::vector<Numerology> groups_;
    std::vector<std::size_t> p_;
    bool strict_ = false;
    double anchor_hz_ = 0.0;
};

/// Sorts the groups by increasing spacing and computes p_t from
/// p_t * (N_t + L_t) = N_0 + L_0.
///
/// Throws AlignmentError when no integer p_t exists (or, in strict mode, when
/// p_t * N_t != N_0), RateError when scs_t * N_t differs between groups and
/// GridError when the anchor is not a whole number of subcarriers of every group.
NumerologySet validate_numerology_set(std::vector<Numerology> groups, bool strict,
                                      double anchor_hz = 0.0);

/// N_0 + L_0.
std::size_t time_unit_samples(const NumerologySet& set);

/// symbols * (N + L) / sample_rate. The nominal subframe duration of a
/// numerology table is not used anywhere; this is the derived one.
double subframe_duration_s(const Numerology& n, double sample_rate);

/// Absolute frequencies (Hz, relative to the carrier) of the first
/// `used_subcarriers` subcarriers of `n`, starting at the set's anchor.
std::vector<double> subcarrier_grid(const Numerology& n, std::size_t used_subcarriers,
                                    const NumerologySet& set);

/// FFT bin (0..N-1) carrying grid index j of numerology n.
std::size_t subcarrier_bin(const Numerology& n, std::size_t j, const NumerologySet& set);

} // namespace mnmimo
