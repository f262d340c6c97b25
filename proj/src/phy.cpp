#include "mnmimo/phy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"
#include "mnmimo/fft.hpp"

namespace mnmimo {

PayloadGrid random_payload(const NumerologySet& set, const std::vector<std::size_t>& users_per_group,
                           const std::vector<std::size_t>& used_per_group, Constellation c,
                           std::uint64_t seed) {
    if (users_per_group.size() != set.size() || used_per_group.size() != set.size())
        throw DimensionError("payload layout does not match the numerology set");
    const auto points = constellation_points(c);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

    PayloadGrid grid;
    grid.constellation = c;
    grid.groups.resize(set.size());
    for (std::size_t t = 0; t < set.size(); ++t) {
        const auto rows = static_cast<Eigen::Index>(set.p_factor(t));
        const auto cols = static_cast<Eigen::Index>(used_per_group[t]);
        for (std::size_t u = 0; u < users_per_group[t]; ++u) {
            CMatrix s(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index j = 0; j < cols; ++j) s(r, j) = points[pick(rng)];
            grid.groups[t].symbols.push_back(std::move(s));
        }
    }
    return grid;
}

CMatrix modulate_group(const GroupPayload& payload, const PrecoderSet& precoders,
                       const NumerologySet& set, const GroupLayout& layout) {
    const std::size_t t = layout.group;
    const Numerology& n = set.group(t);
    const std::size_t p = set.p_factor(t);
    const std::size_t used = layout.used;
    if (used > n.fft_size) throw CountError("more used subcarriers than FFT bins");
    const auto& group = precoders.groups.at(t);
    if (group.subbands.empty()) throw DimensionError(fmt::format("group {} has no precoders", t));

    const auto k_t = static_cast<Eigen::Index>(payload.symbols.size());
    if (group.subbands.front().cols() != k_t)
        throw DimensionError(fmt::format("{} payload streams for a {}-column precoder", k_t,
                                         group.subbands.front().cols()));
    for (const auto& s : payload.symbols)
        if (static_cast<std::size_t>(s.rows()) != p || static_cast<std::size_t>(s.cols()) != used)
            throw DimensionError("payload grid does not match p_t x used subcarriers");
    if (precoders.layout.count(used) > group.subbands.size())
        throw DimensionError("precoder subbands do not cover the used subcarriers");

    const auto m = group.subbands.front().rows();
    const auto fft_n = static_cast<Eigen::Index>(n.fft_size);
    const auto cp = static_cast<Eigen::Index>(n.cp_len);
    const auto sym_len = fft_n + cp;
    const double ifft_scale = 1.0 / std::sqrt(static_cast<double>(used));

    std::vector<std::size_t> bins(used);
    for (std::size_t j = 0; j < used; ++j) bins[j] = subcarrier_bin(n, j, set);

    CMatrix out = CMatrix::Zero(m, static_cast<Eigen::Index>(p) * sym_len);
    CVector s(k_t);
    for (std::size_t sym = 0; sym < p; ++sym) {
        CMatrix freq = CMatrix::Zero(fft_n, m);
        for (std::size_t j = 0; j < used; ++j) {
            if (layout.null_dc && bins[j] == 0) continue;
            for (Eigen::Index u = 0; u < k_t; ++u)
                s(u) = payload.symbols[static_cast<std::size_t>(u)](
                    static_cast<Eigen::Index>(sym), static_cast<Eigen::Index>(j));
            const CMatrix& pj = group.subbands[precoders.layout.of(j)];
            freq.row(static_cast<Eigen::Index>(bins[j])) =
                (precoders.stream_scale * (pj * s)).transpose();
        }
        const auto offset = static_cast<Eigen::Index>(sym) * sym_len;
        for (Eigen::Index a = 0; a < m; ++a) {
            const CVector time = fft::inverse(freq.col(a)) * ifft_scale;
            out.row(a).segment(offset, cp) = time.tail(cp).transpose();
            out.row(a).segment(offset + cp, fft_n) = time.transpose();
        }
    }
    return out;
}

AntennaFrame superpose(const std::vector<CMatrix>& group_streams, double sample_rate) {
    if (group_streams.empty()) throw LengthError("nothing to superpose");
    AntennaFrame frame;
    frame.sample_rate = sample_rate;
    frame.samples = group_streams.front();
    for (std::size_t g = 1; g < group_streams.size(); ++g) {
        const auto& b = group_streams[g];
        if (b.rows() != frame.samples.rows() || b.cols() != frame.samples.cols())
            throw LengthError(fmt::format("group block {} is {}x{}, expected {}x{}", g, b.rows(),
                                          b.cols(), frame.samples.rows(), frame.samples.cols()));
        frame.samples += b;
    }
    return frame;
}

double noise_variance_per_sample(double snr_db, double occupancy) {
    return 1.0 / (occupancy * db_to_linear(snr_db));
}

CVector apply_channel(const AntennaFrame& frame, const ChannelRealization& ch, double noise_var,
                      std::uint64_t seed, const AntennaFrame* previous) {
    const auto len = static_cast<Eigen::Index>(frame.length());
    if (ch.num_antennas() != frame.num_antennas())
        throw DimensionError(fmt::format("channel has {} antennas, frame {}", ch.num_antennas(),
                                         frame.num_antennas()));
    if (ch.max_delay() >= frame.length())
        throw DelayError(fmt::format("tap delay {} reaches past the {}-sample frame",
                                     ch.max_delay(), frame.length()));
    if (previous && (previous->num_antennas() != frame.num_antennas()))
        throw DimensionError("previous frame has a different antenna count");

    CVector y = CVector::Zero(len);
    for (std::size_t i = 0; i < ch.num_taps(); ++i) {
        const auto d = static_cast<Eigen::Index>(ch.delays[i]);
        const auto row = static_cast<Eigen::Index>(i);
        // Combine antennas first: z = g_tap * x (1 x len).
        const CVector z = (ch.gains.row(row) * frame.samples).transpose();
        y.tail(len - d) += z.head(len - d);
        if (previous && d > 0) {
            const auto plen = static_cast<Eigen::Index>(previous->length());
            if (plen < d) throw DelayError("previous frame shorter than the tap delay");
            const CVector zp = (ch.gains.row(row) * previous->samples.rightCols(d)).transpose();
            y.head(d) += zp;
        }
    }

    if (noise_var > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_var / 2.0));
        for (Eigen::Index n = 0; n < len; ++n) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            y(n) += Complex(re, im);
        }
    }
    return y;
}

CMatrix demodulate_user(const CVector& y, const NumerologySet& set, const GroupLayout& layout) {
    const Numerology& n = set.group(layout.group);
    const std::size_t p = set.p_factor(layout.group);
    const auto fft_n = static_cast<Eigen::Index>(n.fft_size);
    const auto cp = static_cast<Eigen::Index>(n.cp_len);
    const auto sym_len = fft_n + cp;
    if (y.size() != static_cast<Eigen::Index>(p) * sym_len)
        throw LengthError(fmt::format("received {} samples, expected {}", y.size(),
                                      static_cast<Eigen::Index>(p) * sym_len));
    if (layout.used > n.fft_size) throw CountError("more used subcarriers than FFT bins");

    const double scale = std::sqrt(static_cast<double>(layout.used)) / static_cast<double>(fft_n);
    CMatrix obs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(layout.used));
    for (std::size_t sym = 0; sym < p; ++sym) {
        const CVector spectrum =
            fft::forward(y.segment(static_cast<Eigen::Index>(sym) * sym_len + cp, fft_n));
        for (std::size_t j = 0; j < layout.used; ++j)
            obs(static_cast<Eigen::Index>(sym), static_cast<Eigen::Index>(j)) =
                scale * spectrum(static_cast<Eigen::Index>(subcarrier_bin(n, j, set)));
    }
    return obs;
}

Complex equalize(Complex obs, Complex g_eff, double noise_var) {
    const double power = std::norm(g_eff) + noise_var;
    if (power == 0.0) return {0.0, 0.0};
    return std::conj(g_eff) * obs / power;
}

double demodulated_noise_variance(double noise_var_per_sample, const NumerologySet& set,
                                  const GroupLayout& layout) {
    return noise_var_per_sample * static_cast<double>(layout.used) /
           static_cast<double>(set.group(layout.group).fft_size);
}

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little, "sample dumps assume a little-endian host");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    os.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    char bytes[sizeof(T)];
    if (!is.read(bytes, sizeof(T))) throw LengthError("truncated sample dump");
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

constexpr char kMagic[8] = {'M', 'N', 'S', 'A', 'M', 'P', '0', '1'};

} // namespace

std::vector<std::filesystem::path> write_sample_dump(const AntennaFrame& frame,
                                                     const std::filesystem::path& dir,
                                                     const std::string& prefix) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (std::size_t m = 0; m < frame.num_antennas(); ++m) {
        auto path = dir / fmt::format("{}_ant{}.bin", prefix, m);
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
        os.write(kMagic, sizeof(kMagic));
        put_le<double>(os, frame.sample_rate);
        put_le<std::uint64_t>(os, frame.length());
        for (std::size_t n = 0; n < frame.length(); ++n) {
            const Complex v = frame.samples(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
            put_le<double>(os, v.real());
            put_le<double>(os, v.imag());
        }
        files.push_back(std::move(path));
    }
    return files;
}

SampleDump read_sample_dump(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error(fmt::format("cannot read {}", file.string()));
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw LengthError(fmt::format("{} is not a sample dump", file.string()));
    SampleDump dump;
    dump.sample_rate = get_le<double>(is);
    const auto count = get_le<std::uint64_t>(is);
    dump.samples.resize(static_cast<Eigen::Index>(count));
    for (std::uint64_t n = 0; n < count; ++n) {
        const double re = get_le<double>(is);
        const double im = get_le<double>(is);
        dump.samples(static_cast<Eigen::Index>(n)) = Complex(re, im);
    }
    return dump;
}

} // namespace mnmimo
