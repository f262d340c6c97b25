#pragma once

#include <cstddef>
#include <vector>

#include "mnmimo/types.hpp"

namespace mnmimo {

enum class FilterKind { HannSinc };

/// Rational rate change p/q, stored in lowest terms.
struct ResampleSpec {
    std::size_t up = 1;
    std::size_t down = 1;
    std::size_t filter_len = 33;
    FilterKind kind = FilterKind::HannSinc;

    /// Reduces p/q; throws FactorError on zero factors and on an even or
    /// too-short filter.
    static ResampleSpec make(std::size_t p, std::size_t q, std::size_t filter_len = 33,
                             FilterKind kind = FilterKind::HannSinc);
};

/// Interpolation kernel for up-factor p followed by down-factor q: a
/// Hann-windowed sinc with cutoff min(pi/p, pi/q) and gain p, centered on
/// index filter_len / 2. Each polyphase branch is rescaled to unit DC gain.
std::vector<double> design_kernel(std::size_t p, std::size_t q, std::size_t filter_len);

/// Zero-stuffs by p and filters with design_kernel(p, spec.down, ...).
/// The sequence is mirror-extended about its end samples. Output length p*len.
CVector upsample(const CVector& seq, std::size_t p, const ResampleSpec& spec);

/// Keeps samples 0, q, 2q, ...; no anti-alias filter. Output ceil(len/q).
CVector downsample(const CVector& seq, std::size_t q);

/// downsample(upsample(seq, p), q) after reducing p/q.
CVector resample(const CVector& seq, std::size_t p, std::size_t q, const ResampleSpec& spec);

/// Column-wise resample of a (subcarriers x antennas) response.
CMatrix resample_columns(const CMatrix& response, std::size_t p, std::size_t q,
                         const ResampleSpec& spec);

} // namespace mnmimo
