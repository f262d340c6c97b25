#include "mnmimo/qam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"

namespace mnmimo {
namespace {

std::size_t bits_per_axis(Constellation c) { return bits_per_symbol(c) / 2; }

// Odd-integer level of one axis from its k bits (first bit = sign):
// 2^(k-1) + s1 2^(k-2) + s1 s2 2^(k-3) + ... with s_i = 1 - 2 b_i.
int axis_level(const std::uint8_t* bits, std::size_t stride, std::size_t k) {
    int magnitude = 1 << (k - 1);
    int prod = 1;
    for (std::size_t i = 1; i < k; ++i) {
        prod *= 1 - 2 * bits[i * stride];
        magnitude += prod * (1 << (k - 1 - i));
    }
    return (1 - 2 * bits[0]) * magnitude;
}

double scale(Constellation c) {
    const double q = static_cast<double>(1u << bits_per_symbol(c));
    return 1.0 / std::sqrt(2.0 * (q - 1.0) / 3.0);
}

// levels[i] for i = 0..2^k-1 (ascending odd integers) -> axis bit pattern.
std::vector<std::vector<std::uint8_t>> axis_bits_by_level(std::size_t k) {
    const std::size_t n = std::size_t{1} << k;
    std::vector<std::vector<std::uint8_t>> table(n);
    std::vector<std::uint8_t> bits(k);
    for (std::size_t code = 0; code < n; ++code) {
        for (std::size_t i = 0; i < k; ++i) bits[i] = (code >> (k - 1 - i)) & 1u;
        const int level = axis_level(bits.data(), 1, k);
        const auto idx = static_cast<std::size_t>((level + static_cast<int>(n) - 1) / 2);
        table[idx] = bits;
    }
    return table;
}

} // namespace

std::string_view to_string(Constellation c) {
    switch (c) {
    case Constellation::QPSK: return "qpsk";
    case Constellation::QAM16: return "16qam";
    case Constellation::QAM64: return "64qam";
    case Constellation::QAM256: return "256qam";
    }
    return "?";
}

Constellation parse_constellation(std::string_view text) {
    if (text == "qpsk" || text == "QPSK") return Constellation::QPSK;
    if (text == "16qam" || text == "16QAM") return Constellation::QAM16;
    if (text == "64qam" || text == "64QAM") return Constellation::QAM64;
    if (text == "256qam" || text == "256QAM") return Constellation::QAM256;
    throw std::invalid_argument(fmt::format("unknown constellation '{}'", text));
}

std::size_t bits_per_symbol(Constellation c) {
    switch (c) {
    case Constellation::QPSK: return 2;
    case Constellation::QAM16: return 4;
    case Constellation::QAM64: return 6;
    case Constellation::QAM256: return 8;
    }
    return 0;
}

std::vector<Complex> qam_map(std::span<const std::uint8_t> bits, Constellation c) {
    const std::size_t bps = bits_per_symbol(c);
    if (bits.size() % bps != 0)
        throw LengthError(fmt::format("{} bits is not a multiple of {}", bits.size(), bps));
    const std::size_t k = bits_per_axis(c);
    const double s = scale(c);
    std::vector<Complex> out;
    out.reserve(bits.size() / bps);
    for (std::size_t i = 0; i < bits.size(); i += bps) {
        const std::uint8_t* b = bits.data() + i;
        out.emplace_back(s * axis_level(b, 2, k), s * axis_level(b + 1, 2, k));
    }
    return out;
}

std::vector<std::uint8_t> qam_demap(std::span<const Complex> symbols, Constellation c) {
    const std::size_t k = bits_per_axis(c);
    const auto n = static_cast<long long>(std::size_t{1} << k);
    const double s = scale(c);
    const auto table = axis_bits_by_level(k);
    const auto slice = [&](double v) {
        const long long idx = static_cast<long long>(std::floor(v / s / 2.0 + n / 2.0));
        return table[static_cast<std::size_t>(std::clamp(idx, 0LL, n - 1))];
    };

    std::vector<std::uint8_t> out;
    out.reserve(symbols.size() * 2 * k);
    for (const auto& z : symbols) {
        const auto& bi = slice(z.real());
        const auto& bq = slice(z.imag());
        for (std::size_t i = 0; i < k; ++i) {
            out.push_back(bi[i]);
            out.push_back(bq[i]);
        }
    }
    return out;
}

std::vector<Complex> constellation_points(Constellation c) {
    const std::size_t bps = bits_per_symbol(c);
    const std::size_t q = std::size_t{1} << bps;
    std::vector<std::uint8_t> bits(q * bps);
    for (std::size_t v = 0; v < q; ++v)
        for (std::size_t i = 0; i < bps; ++i) bits[v * bps + i] = (v >> (bps - 1 - i)) & 1u;
    return qam_map(bits, c);
}

} // namespace mnmimo
