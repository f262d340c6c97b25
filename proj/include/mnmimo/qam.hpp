#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mnmimo/types.hpp"

namespace mnmimo {

enum class Constellation { QPSK, QAM16, QAM64, QAM256 };

std::string_view to_string(Constellation c);
Constellation parse_constellation(std::string_view text);
std::size_t bits_per_symbol(Constellation c);

/// Gray-mapped square QAM with unit average power.
///
/// Bits alternate between the in-phase and quadrature axis (b0 -> I, b1 -> Q,
/// b2 -> I, ...). On each axis the first bit is the sign (0 = positive) and
/// each further bit picks the outer (0) or inner (1) half of what remains:
///
///   level = (1-2c0) * (2^(k-1) + (1-2c1) * (2^(k-2) + (1-2c2) * (...)))
///
/// scaled by 1/sqrt(2(Q-1)/3) for Q points. QPSK 00 is (1+i)/sqrt(2); 16QAM
/// 0000 is the corner (3+3i)/sqrt(10), 0011 is the inner point (1+i)/sqrt(10).
std::vector<Complex> qam_map(std::span<const std::uint8_t> bits, Constellation c);

/// Nearest-neighbor hard decision, inverse of qam_map.
std::vector<std::uint8_t> qam_demap(std::span<const Complex> symbols, Constellation c);

/// Every constellation point, indexed by the integer whose MSB is b0.
std::vector<Complex> constellation_points(Constellation c);

} // namespace mnmimo
