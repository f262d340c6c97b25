#include "mnmimo/resampling.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"

namespace mnmimo {
namespace {

// Whole-sample symmetric reflection: ... x2 x1 | x0 x1 ... x(n-1) | x(n-2) ...
std::size_t mirror_index(long long i, std::size_t n) {
    const auto period = static_cast<long long>(2 * (n - 1));
    long long k = i % period;
    if (k < 0) k += period;
    if (k >= static_cast<long long>(n)) k = period - k;
    return static_cast<std::size_t>(k);
}

long long floor_div(long long a, long long b) {
    long long d = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
    return d;
}

} // namespace

ResampleSpec ResampleSpec::make(std::size_t p, std::size_t q, std::size_t filter_len,
                                FilterKind kind) {
    if (p < 1 || q < 1) throw FactorError(fmt::format("resampling factors must be >= 1 ({}/{})", p, q));
    if (filter_len < 3 || filter_len % 2 == 0)
        throw FactorError(fmt::format("filter_len must be odd and >= 3, got {}", filter_len));
    const std::size_t g = std::gcd(p, q);
    return ResampleSpec{p / g, q / g, filter_len, kind};
}

std::vector<double> design_kernel(std::size_t p, std::size_t q, std::size_t filter_len) {
    if (p < 1 || q < 1) throw FactorError("resampling factors must be >= 1");
    if (filter_len < 3 || filter_len % 2 == 0)
        throw FactorError(fmt::format("filter_len must be odd and >= 3, got {}", filter_len));

    const auto center = static_cast<long long>(filter_len / 2);
    const double cutoff = 1.0 / static_cast<double>(std::max(p, q)); // in units of pi
    std::vector<double> h(filter_len);
    for (std::size_t n = 0; n < filter_len; ++n) {
        const double t = static_cast<double>(static_cast<long long>(n) - center);
        const double x = cutoff * t;
        const double sinc = t == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
        const double window =
            0.5 + 0.5 * std::cos(2.0 * kPi * t / static_cast<double>(filter_len + 1));
        h[n] = static_cast<double>(p) * cutoff * sinc * window;
    }

    // Unit DC gain per polyphase branch: constants pass unchanged.
    for (std::size_t r = 0; r < p; ++r) {
        double sum = 0.0;
        for (std::size_t n = 0; n < filter_len; ++n) {
            const long long offset = static_cast<long long>(n) - center;
            if (((offset % static_cast<long long>(p)) + static_cast<long long>(p)) %
                    static_cast<long long>(p) ==
                static_cast<long long>(r))
                sum += h[n];
        }
        if (sum == 0.0) continue;
        for (std::size_t n = 0; n < filter_len; ++n) {
            const long long offset = static_cast<long long>(n) - center;
            if (((offset % static_cast<long long>(p)) + static_cast<long long>(p)) %
                    static_cast<long long>(p) ==
                static_cast<long long>(r))
                h[n] /= sum;
        }
    }
    return h;
}

CVector upsample(const CVector& seq, std::size_t p, const ResampleSpec& spec) {
    if (p < 1) throw FactorError("up-sampling factor must be >= 1");
    if (p == 1) return seq;
    const auto n = static_cast<std::size_t>(seq.size());
    if (n < 2) throw LengthError("up-sampling needs at least two samples");

    const auto h = design_kernel(p, spec.down, spec.filter_len);
    const auto center = static_cast<long long>(spec.filter_len / 2);
    const auto pp = static_cast<long long>(p);

    CVector out(static_cast<Eigen::Index>(n * p));
    for (long long m = 0; m < static_cast<long long>(n * p); ++m) {
        Complex acc{0.0, 0.0};
        const long long first = floor_div(m - center + pp - 1, pp);
        const long long last = floor_div(m + center, pp);
        for (long long i = first; i <= last; ++i) {
            const long long tap = center + m - i * pp;
            acc += h[static_cast<std::size_t>(tap)] *
                   seq(static_cast<Eigen::Index>(mirror_index(i, n)));
        }
        out(static_cast<Eigen::Index>(m)) = acc;
    }
    return out;
}

CVector downsample(const CVector& seq, std::size_t q) {
    if (q < 1) throw FactorError("down-sampling factor must be >= 1");
    const auto n = static_cast<std::size_t>(seq.size());
    CVector out(static_cast<Eigen::Index>((n + q - 1) / q));
    for (std::size_t i = 0; i < static_cast<std::size_t>(out.size()); ++i)
        out(static_cast<Eigen::Index>(i)) = seq(static_cast<Eigen::Index>(i * q));
    return out;
}

CVector resample(const CVector& seq, std::size_t p, std::size_t q, const ResampleSpec& spec) {
    const auto reduced = ResampleSpec::make(p, q, spec.filter_len, spec.kind);
    return downsample(upsample(seq, reduced.up, reduced), reduced.down);
}

CMatrix resample_columns(const CMatrix& response, std::size_t p, std::size_t q,
                         const ResampleSpec& spec) {
    const auto reduced = ResampleSpec::make(p, q, spec.filter_len, spec.kind);
    CMatrix out;
    for (Eigen::Index m = 0; m < response.cols(); ++m) {
        const CVector col = resample(response.col(m), reduced.up, reduced.down, reduced);
        if (m == 0) out.resize(col.size(), response.cols());
        out.col(m) = col;
    }
    return out;
}

} // namespace mnmimo
