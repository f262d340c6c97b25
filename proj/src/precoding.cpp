#include "mnmimo/precoding.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "mnmimo/errors.hpp"
#include "mnmimo/log.hpp"

namespace mnmimo {

std::string_view to_string(PrecoderMethod m) {
    return m == PrecoderMethod::CB ? "CB" : "SLNR";
}

PrecoderMethod parse_precoder_method(std::string_view text) {
    if (text == "cb" || text == "CB") return PrecoderMethod::CB;
    if (text == "slnr" || text == "SLNR") return PrecoderMethod::SLNR;
    throw std::invalid_argument(fmt::format("unknown precoder method '{}'", text));
}

std::size_t UserGroupChannels::total_users() const noexcept {
    std::size_t k = 0;
    for (const auto& g : users) k += g.size();
    return k;
}

std::size_t UserGroupChannels::num_antennas() const {
    for (const auto& g : users)
        if (!g.empty()) return static_cast<std::size_t>(g.front().cols());
    throw DimensionError("no users");
}

std::size_t UserGroupChannels::used_subcarriers(std::size_t t) const {
    if (users.at(t).empty()) throw DimensionError(fmt::format("group {} has no users", t));
    return static_cast<std::size_t>(users[t].front().rows());
}

std::size_t UserGroupChannels::stacked_index(std::size_t t, std::size_t u) const {
    std::size_t k = 0;
    for (std::size_t g = 0; g < t; ++g) k += users.at(g).size();
    return k + u;
}

void check_channels(const UserGroupChannels& channels, const NumerologySet& set) {
    if (channels.num_groups() != set.size())
        throw DimensionError(fmt::format("{} channel groups for {} numerologies",
                                         channels.num_groups(), set.size()));
    const std::size_t m = channels.num_antennas();
    for (std::size_t t = 0; t < channels.num_groups(); ++t) {
        const auto& g = channels.users[t];
        for (const auto& h : g) {
            if (static_cast<std::size_t>(h.cols()) != m)
                throw DimensionError("users disagree on the antenna count");
            if (h.rows() != g.front().rows())
                throw DimensionError(fmt::format("users of group {} are on different grids", t));
        }
    }
    if (channels.total_users() > m)
        log::warn(fmt::format("{} users on {} antennas: more streams than antennas",
                              channels.total_users(), m));
}

CVector PrecoderSet::column(std::size_t t, std::size_t u, std::size_t j) const {
    const auto& sbs = groups.at(t).subbands;
    return sbs.at(std::min(layout.of(j), sbs.size() - 1)).col(static_cast<Eigen::Index>(u));
}

namespace {

CVector normalize(CVector v, Normalization norm) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ZeroChannelError("precoder has zero norm");
    if (norm == Normalization::UnitColumn) v /= n;
    return v;
}

} // namespace

CVector cb_precoder(const CVector& h, Normalization norm) {
    if (h.norm() == 0.0) throw ZeroChannelError("conjugate beamformer of a zero channel");
    return normalize(h.conjugate(), norm);
}

CVector slnr_precoder(const CVector& h_u, const CMatrix& stacked, double sigma2,
                      Normalization norm) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("SLNR needs sigma2 > 0");
    if (stacked.cols() != h_u.size())
        throw DimensionError("stacked channel width differs from the user channel length");
    CMatrix a = stacked.adjoint() * stacked;
    a.diagonal().array() += sigma2;
    const CVector x = a.ldlt().solve(h_u.conjugate());
    if (x.norm() == 0.0) throw ZeroChannelError("SLNR precoder of a zero channel");
    return normalize(x, norm);
}

CVector sb_effective_channel(const CMatrix& block) {
    const auto m = block.cols();
    if (block.rows() == 0) throw DimensionError("empty subband");
    const CMatrix cov = (block.adjoint() * block) / static_cast<double>(block.rows());
    if (cov.norm() == 0.0) {
        log::warn("zero channel in subband; effective channel is zero");
        return CVector::Zero(m);
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(cov);
    const double lambda = std::max(0.0, eig.eigenvalues()(m - 1));
    CVector h = eig.eigenvectors().col(m - 1).conjugate() * std::sqrt(lambda);

    // Phase convention: first entry above a relative threshold is real-positive.
    const double threshold = 1e-12 * h.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(h(i)) > threshold) {
            h *= std::conj(h(i)) / std::abs(h(i));
            h(i) = Complex(std::abs(h(i)), 0.0);
            break;
        }
    }
    return h;
}

std::vector<CMatrix> align_channels(const UserGroupChannels& channels, const NumerologySet& set,
                                    std::size_t target, std::size_t filter_len) {
    check_channels(channels, set);
    if (set.size() > 1 && !set.spacing_multiples())
        throw GridError("spacings are not integer multiples; channel grids cannot be aligned");
    const std::size_t used = channels.used_subcarriers(target);
    const auto spec_for = [&](std::size_t p, std::size_t q) {
        return ResampleSpec::make(p, q, filter_len);
    };

    std::vector<CMatrix> aligned;
    aligned.reserve(channels.total_users());
    for (std::size_t t = 0; t < channels.num_groups(); ++t) {
        for (const auto& h : channels.users[t]) {
            if (t == target) {
                aligned.push_back(h);
                continue;
            }
            // Spacing ratio scs_t / scs_target = p_t / p_target.
            const auto spec = spec_for(set.p_factor(t), set.p_factor(target));
            CMatrix r = resample_columns(h, spec.up, spec.down, spec);
            if (static_cast<std::size_t>(r.rows()) < used)
                throw GridError(fmt::format(
                    "group {} spans {} subcarriers on group {}'s grid, fewer than its {}", t,
                    r.rows(), target, used));
            aligned.push_back(r.topRows(static_cast<Eigen::Index>(used)));
        }
    }
    return aligned;
}

CMatrix stack_channels(const std::vector<CMatrix>& aligned, std::size_t begin, std::size_t end) {
    if (aligned.empty()) throw DimensionError("no users to stack");
    if (end <= begin) throw DimensionError("empty subband");
    const auto m = aligned.front().cols();
    CMatrix stacked(static_cast<Eigen::Index>(aligned.size()), m);
    for (std::size_t k = 0; k < aligned.size(); ++k) {
        const auto rows = static_cast<Eigen::Index>(end - begin);
        stacked.row(static_cast<Eigen::Index>(k)) =
            sb_effective_channel(aligned[k].middleRows(static_cast<Eigen::Index>(begin), rows))
                .transpose();
    }
    return stacked;
}

PrecoderSet build_precoder_set(const UserGroupChannels& channels, const NumerologySet& set,
                               const PrecoderOptions& options) {
    check_channels(channels, set);
    if (options.subband_size == 0) throw DimensionError("subband size must be positive");

    PrecoderSet out;
    out.method = options.method;
    out.normalization = options.normalization;
    out.sigma2 = options.sigma2;
    out.layout = SubbandLayout{options.subband_size};
    out.stream_scale = 1.0 / std::sqrt(static_cast<double>(channels.total_users()));
    out.groups.resize(channels.num_groups());

    const auto m = static_cast<Eigen::Index>(channels.num_antennas());
    for (std::size_t t = 0; t < channels.num_groups(); ++t) {
        const std::size_t k_t = channels.num_users(t);
        if (k_t == 0) continue;
        const std::size_t used = channels.used_subcarriers(t);
        const std::size_t n_sb = out.layout.count(used);

        std::vector<CMatrix> aligned;
        if (options.method == PrecoderMethod::SLNR)
            aligned = align_channels(channels, set, t, options.filter_len);

        auto& group = out.groups[t];
        for (std::size_t sb = 0; sb < n_sb; ++sb) {
            const std::size_t begin = out.layout.begin(sb);
            const std::size_t end = out.layout.end(sb, used);
            CMatrix p(m, static_cast<Eigen::Index>(k_t));
            std::vector<double> norms(k_t);

            if (options.method == PrecoderMethod::CB) {
                for (std::size_t u = 0; u < k_t; ++u) {
                    const CVector h = sb_effective_channel(channels.users[t][u].middleRows(
                        static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)));
                    const CVector raw = cb_precoder(h, Normalization::None);
                    norms[u] = raw.norm();
                    p.col(static_cast<Eigen::Index>(u)) =
                        options.normalization == Normalization::UnitColumn ? CVector(raw / norms[u])
                                                                           : raw;
                }
            } else {
                const CMatrix stacked = stack_channels(aligned, begin, end);
                for (std::size_t u = 0; u < k_t; ++u) {
                    const auto row = static_cast<Eigen::Index>(channels.stacked_index(t, u));
                    const CVector raw = slnr_precoder(stacked.row(row).transpose(), stacked,
                                                      options.sigma2, Normalization::None);
                    norms[u] = raw.norm();
                    p.col(static_cast<Eigen::Index>(u)) =
                        options.normalization == Normalization::UnitColumn ? CVector(raw / norms[u])
                                                                           : raw;
                }
            }
            group.subbands.push_back(std::move(p));
            group.column_norms.push_back(std::move(norms));
        }
    }
    return out;
}

} // namespace mnmimo
