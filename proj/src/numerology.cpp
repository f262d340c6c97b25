#include "mnmimo/numerology.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"

namespace mnmimo {
namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// Integer number of subcarriers of spacing scs in `hz`, if any.
std::optional<long long> whole_subcarriers(double hz, double scs) {
    const double k = hz / scs;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k))) return std::nullopt;
    return static_cast<long long>(r);
}

} // namespace

void check_numerology(const Numerology& n) {
    if (!is_power_of_two(n.fft_size))
        throw NumerologyError(fmt::format("fft_size {} is not a power of two >= 2", n.fft_size));
    if (n.cp_len >= n.fft_size)
        throw NumerologyError(
            fmt::format("cp_len {} must be below fft_size {}", n.cp_len, n.fft_size));
    if (!(n.scs_hz > 0.0) || !std::isfinite(n.scs_hz))
        throw NumerologyError("scs_hz must be positive");
}

double NumerologySet::sample_rate() const noexcept {
    return groups_.front().scs_hz * static_cast<double>(groups_.front().fft_size);
}

bool NumerologySet::spacing_multiples() const noexcept {
    for (std::size_t t = 0; t < groups_.size(); ++t)
        if (p_[t] * groups_[t].fft_size != groups_.front().fft_size) return false;
    return true;
}

NumerologySet validate_numerology_set(std::vector<Numerology> groups, bool strict,
                                      double anchor_hz) {
    if (groups.empty()) throw NumerologyError("numerology set is empty");
    for (const auto& g : groups) check_numerology(g);

    std::sort(groups.begin(), groups.end(), [](const Numerology& a, const Numerology& b) {
        return std::tie(a.scs_hz, a.fft_size, a.cp_len, a.symbols_per_subframe) <
               std::tie(b.scs_hz, b.fft_size, b.cp_len, b.symbols_per_subframe);
    });

    const std::size_t unit = groups.front().symbol_samples();
    std::vector<std::size_t> p;
    p.reserve(groups.size());
    for (const auto& g : groups) {
        const std::size_t len = g.symbol_samples();
        if (unit % len != 0)
            throw AlignmentError(fmt::format(
                "no integer p with p*({}+{}) = {}: symbol of {} samples does not divide the "
                "time unit",
                g.fft_size, g.cp_len, unit, len));
        p.push_back(unit / len);
    }

    const double rate = groups.front().scs_hz * static_cast<double>(groups.front().fft_size);
    for (const auto& g : groups) {
        const double r = g.scs_hz * static_cast<double>(g.fft_size);
        if (std::abs(r - rate) > 1e-9 * rate)
            throw RateError(fmt::format("sample rate {} Hz of the {} Hz group differs from {} Hz",
                                        r, g.scs_hz, rate));
    }

    if (strict) {
        for (std::size_t t = 0; t < groups.size(); ++t)
            if (p[t] * groups[t].fft_size != groups.front().fft_size)
                throw AlignmentError(fmt::format("strict set requires p*N = {} but group {} has "
                                                 "p = {}, N = {}",
                                                 groups.front().fft_size, t, p[t],
                                                 groups[t].fft_size));
    }

    for (const auto& g : groups)
        if (!whole_subcarriers(anchor_hz, g.scs_hz))
            throw GridError(fmt::format("anchor {} Hz is not on the {} Hz subcarrier raster",
                                        anchor_hz, g.scs_hz));

    NumerologySet set;
    set.groups_ = std::move(groups);
    set.p_ = std::move(p);
    set.strict_ = strict;
    set.anchor_hz_ = anchor_hz;
    return set;
}

std::size_t time_unit_samples(const NumerologySet& set) {
    return set.group(0).symbol_samples();
}

double subframe_duration_s(const Numerology& n, double sample_rate) {
    return static_cast<double>(n.symbols_per_subframe * n.symbol_samples()) / sample_rate;
}

std::vector<double> subcarrier_grid(const Numerology& n, std::size_t used_subcarriers,
                                    const NumerologySet& set) {
    if (used_subcarriers > n.fft_size)
        throw CountError(fmt::format("{} used subcarriers exceed fft_size {}", used_subcarriers,
                                     n.fft_size));
    std::vector<double> grid(used_subcarriers);
    for (std::size_t j = 0; j < used_subcarriers; ++j)
        grid[j] = set.anchor_hz() + static_cast<double>(j) * n.scs_hz;
    return grid;
}

std::size_t subcarrier_bin(const Numerology& n, std::size_t j, const NumerologySet& set) {
    const auto whole = whole_subcarriers(set.anchor_hz(), n.scs_hz);
    if (!whole) throw GridError("anchor is not on the subcarrier raster");
    const long long first = *whole;
    const auto size = static_cast<long long>(n.fft_size);
    long long k = (first + static_cast<long long>(j)) % size;
    if (k < 0) k += size;
    return static_cast<std::size_t>(k);
}

} // namespace mnmimo
