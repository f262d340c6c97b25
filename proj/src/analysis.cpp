#include "mnmimo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mnmimo/errors.hpp"

namespace mnmimo {

Evm evm(std::span<const Complex> received, std::span<const Complex> ideal) {
    if (received.size() != ideal.size())
        throw LengthError(fmt::format("EVM of {} received vs {} ideal symbols", received.size(),
                                      ideal.size()));
    if (ideal.empty()) throw EmptyError("EVM of no symbols");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < ideal.size(); ++i) {
        err += std::norm(received[i] - ideal[i]);
        ref += std::norm(ideal[i]);
    }
    if (ref == 0.0) throw EmptyError("EVM reference has zero power");
    const double ratio = std::sqrt(err / ref);
    Evm e;
    e.percent = 100.0 * ratio;
    e.db = ratio > 0.0 ? std::max(kEvmFloorDb, 20.0 * std::log10(ratio)) : kEvmFloorDb;
    return e;
}

std::size_t coarse_index(const NumerologySet& set, std::size_t t, std::size_t fine_j) {
    if (t == 0) return fine_j;
    if (!set.spacing_multiples())
        throw GridError("spacings are not integer multiples of the finest spacing");
    return fine_j / set.p_factor(t);
}

namespace {

struct UserRef {
    std::size_t group;
    std::size_t user;
};

std::vector<UserRef> stacked_users(const std::vector<std::size_t>& users_per_group) {
    std::vector<UserRef> refs;
    for (std::size_t t = 0; t < users_per_group.size(); ++t)
        for (std::size_t u = 0; u < users_per_group[t]; ++u) refs.push_back({t, u});
    return refs;
}

void check_fine_channels(const std::vector<CMatrix>& channels, std::size_t expected_users) {
    if (channels.size() != expected_users)
        throw DimensionError(fmt::format("{} channels for {} users", channels.size(), expected_users));
    for (const auto& h : channels)
        if (h.rows() != channels.front().rows() || h.cols() != channels.front().cols())
            throw DimensionError("channels are not on one common grid");
}

} // namespace

std::vector<std::vector<double>> mu_sinr(const std::vector<CMatrix>& channels,
                                         const PrecoderSet& precoders, const NumerologySet& set,
                                         const std::vector<std::size_t>& users_per_group,
                                         double snr_linear, std::size_t analysis_subband) {
    const auto users = stacked_users(users_per_group);
    check_fine_channels(channels, users.size());
    if (analysis_subband == 0) throw DimensionError("analysis subband must be positive");
    const std::size_t k_total = users.size();
    const auto used = static_cast<std::size_t>(channels.front().rows());
    const SubbandLayout layout{analysis_subband};
    const std::size_t n_sb = layout.count(used);
    const double s2 = precoders.stream_scale * precoders.stream_scale;

    std::vector<std::vector<double>> sinr(k_total, std::vector<double>(n_sb, 0.0));
    CMatrix cols(channels.front().cols(), static_cast<Eigen::Index>(k_total));
    for (std::size_t sb = 0; sb < n_sb; ++sb) {
        const std::size_t begin = layout.begin(sb);
        const std::size_t end = layout.end(sb, used);
        std::vector<double> signal(k_total, 0.0);
        std::vector<double> interference(k_total, 0.0);
        for (std::size_t j = begin; j < end; ++j) {
            for (std::size_t m = 0; m < k_total; ++m)
                cols.col(static_cast<Eigen::Index>(m)) = precoders.column(
                    users[m].group, users[m].user, coarse_index(set, users[m].group, j));
            for (std::size_t k = 0; k < k_total; ++k) {
                const Eigen::RowVectorXcd g = channels[k].row(static_cast<Eigen::Index>(j)) * cols;
                for (std::size_t m = 0; m < k_total; ++m) {
                    const double power = std::norm(g(static_cast<Eigen::Index>(m))) * s2;
                    if (m == k)
                        signal[k] += power;
                    else
                        interference[k] += power;
                }
            }
        }
        const double count = static_cast<double>(end - begin);
        for (std::size_t k = 0; k < k_total; ++k)
            sinr[k][sb] = snr_linear * (signal[k] / count) /
                          (1.0 + snr_linear * (interference[k] / count));
    }
    return sinr;
}

std::vector<std::vector<double>> su_beamforming_gain(const std::vector<CMatrix>& channels,
                                                     const PrecoderSet& cb_precoders,
                                                     const NumerologySet& set,
                                                     const std::vector<std::size_t>& users_per_group,
                                                     std::size_t analysis_subband) {
    const auto users = stacked_users(users_per_group);
    check_fine_channels(channels, users.size());
    const auto used = static_cast<std::size_t>(channels.front().rows());
    const SubbandLayout layout{analysis_subband};
    const std::size_t n_sb = layout.count(used);

    std::vector<std::vector<double>> gain(users.size(), std::vector<double>(n_sb, 0.0));
    for (std::size_t k = 0; k < users.size(); ++k)
        for (std::size_t sb = 0; sb < n_sb; ++sb) {
            const std::size_t begin = layout.begin(sb);
            const std::size_t end = layout.end(sb, used);
            double acc = 0.0;
            for (std::size_t j = begin; j < end; ++j) {
                const CVector p = cb_precoders.column(users[k].group, users[k].user,
                                                      coarse_index(set, users[k].group, j));
                acc += std::norm((channels[k].row(static_cast<Eigen::Index>(j)) * p).value());
            }
            gain[k][sb] = acc / static_cast<double>(end - begin);
        }
    return gain;
}

double capacity_su(std::span<const CVector> users, double snr_linear) {
    std::vector<double> gains;
    gains.reserve(users.size());
    for (const auto& h : users) gains.push_back(h.squaredNorm());
    return capacity_su_from_gains(gains, snr_linear);
}

double capacity_su_from_gains(std::span<const double> gains, double snr_linear) {
    double best = 0.0;
    for (double g : gains) best = std::max(best, std::log2(1.0 + snr_linear * g));
    return best;
}

double capacity_mu(std::span<const double> sinrs) {
    double c = 0.0;
    for (double s : sinrs) c += std::log2(1.0 + s);
    return c;
}

double capacity_switched(std::span<const std::pair<double, double>> su_mu) {
    if (su_mu.empty()) throw EmptyError("no subbands");
    double acc = 0.0;
    for (const auto& [su, mu] : su_mu) acc += std::max(su, mu);
    return acc / static_cast<double>(su_mu.size());
}

std::map<SummaryKey, SummaryStats> aggregate(std::span<const MetricRecord> records) {
    if (records.empty()) throw EmptyError("nothing to aggregate");
    std::map<SummaryKey, std::vector<double>> buckets;
    for (const auto& r : records)
        buckets[SummaryKey{r.scenario, r.antennas, r.method, r.metric, r.user, r.symbol, r.snr_db}]
            .push_back(r.value);

    std::map<SummaryKey, SummaryStats> out;
    for (auto& [key, values] : buckets) {
        SummaryStats s;
        s.count = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / static_cast<double>(s.count);
        if (s.count > 1) {
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean) * (v - s.mean);
            s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
        }
        std::sort(values.begin(), values.end());
        const std::size_t mid = s.count / 2;
        s.median = s.count % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
        out.emplace(key, s);
    }
    return out;
}

double snr_at_capacity(std::span<const double> snr_db, std::span<const double> capacity,
                       double target) {
    if (snr_db.size() != capacity.size()) throw LengthError("curve axes differ in length");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (snr_db.empty() || capacity.front() >= target) return nan;
    for (std::size_t i = 1; i < snr_db.size(); ++i) {
        if (capacity[i] >= target) {
            const double c0 = capacity[i - 1];
            const double c1 = capacity[i];
            const double w = (target - c0) / (c1 - c0);
            return snr_db[i - 1] + w * (snr_db[i] - snr_db[i - 1]);
        }
    }
    return nan;
}

} // namespace mnmimo
