#include "mnmimo/selfcheck.hpp"

#include <cmath>
#include <exception>
#include <random>

#include <fmt/format.h>

#include "mnmimo/channel.hpp"
#include "mnmimo/errors.hpp"
#include "mnmimo/phy.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/resampling.hpp"
#include "mnmimo/seeds.hpp"

namespace mnmimo {

bool SelfCheckReport::all_passed() const noexcept {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

namespace {

constexpr std::uint64_t kSeed = 20240611;

NumerologySet single_group() {
    return validate_numerology_set({Numerology{15e3, 2048, 144, 14}}, true, -300 * 15e3);
}

PrecoderSet random_precoders(std::size_t m, std::size_t used, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    PrecoderSet set;
    set.stream_scale = 1.0 / std::sqrt(static_cast<double>(k));
    set.groups.resize(1);
    for (std::size_t sb = 0; sb < set.layout.count(used); ++sb) {
        CMatrix p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        for (Eigen::Index r = 0; r < p.rows(); ++r)
            for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = Complex(g(rng), g(rng));
        set.groups[0].subbands.push_back(p);
    }
    return set;
}

CheckResult loopback() {
    const auto set = single_group();
    const std::size_t used = 600;
    const auto payload = random_payload(set, {1}, {used}, Constellation::QAM16, kSeed);
    const auto precoders = random_precoders(1, used, 1, kSeed + 1);
    const GroupLayout layout{0, used, false};
    const auto frame = superpose({modulate_group(payload.groups[0], precoders, set, layout)},
                                 set.sample_rate());
    const CVector y = apply_channel(frame, identity_channel(1, set.sample_rate()), 0.0, 0);
    const CMatrix obs = demodulate_user(y, set, layout);
    double worst = 0.0;
    for (std::size_t j = 0; j < used; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const Complex expect =
            precoders.stream_scale * precoders.column(0, 0, j)(0) * payload.groups[0].symbols[0](0, jj);
        worst = std::max(worst, std::abs(obs(0, jj) - expect));
    }
    return {worst <= 1e-10, fmt::format("max error {:.3g}", worst)};
}

CheckResult frequency_equivalence() {
    const auto set = single_group();
    const auto& n = set.group(0);
    const std::size_t used = 600;
    const std::size_t m = 4;
    const std::size_t k = 2;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto seed = split_seed(kSeed, s);
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> delay(0, n.cp_len);
        TapProfile profile{"random", {}};
        std::vector<std::size_t> d(5);
        for (auto& x : d) x = delay(rng);
        std::sort(d.begin(), d.end());
        for (auto x : d) profile.taps.push_back({static_cast<double>(x) / set.sample_rate(), 0.0, 0.0});
        ArrayGeometry geometry;
        geometry.num_elements = m;
        ChannelOptions opts;
        opts.sample_rate = set.sample_rate();
        const auto ch = generate_realization(profile, geometry, 60.0, seed, opts);

        const auto payload = random_payload(set, {k}, {used}, Constellation::QPSK, seed + 1);
        const auto precoders = random_precoders(m, used, k, seed + 2);
        const GroupLayout layout{0, used, false};
        const auto frame = superpose({modulate_group(payload.groups[0], precoders, set, layout)},
                                     set.sample_rate());
        const CVector y = apply_channel(frame, ch, 0.0, 0);
        const CMatrix obs = demodulate_user(y, set, layout);
        const CMatrix h = frequency_response(ch, subcarrier_grid(n, used, set));
        for (std::size_t j = 0; j < used; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            CVector sym(static_cast<Eigen::Index>(k));
            for (std::size_t u = 0; u < k; ++u) sym(static_cast<Eigen::Index>(u)) = payload.groups[0].symbols[u](0, jj);
            const Complex expect = precoders.stream_scale *
                                   (h.row(jj) * precoders.groups[0].subbands[precoders.layout.of(j)] * sym).value();
            worst = std::max(worst, std::abs(obs(0, jj) - expect));
        }
    }
    return {worst <= 1e-9, fmt::format("max error {:.3g}", worst)};
}

CheckResult resampler_round_trip() {
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> g(0.0, 1.0);
    CVector x(288);
    for (auto& v : x) v = Complex(g(rng), g(rng));
    double worst = 0.0;
    for (std::size_t p : {2, 4}) {
        const auto spec = ResampleSpec::make(p, 1);
        const CVector back = downsample(upsample(x, p, spec), p);
        worst = std::max(worst, (back - x).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-12, fmt::format("max round-trip error {:.3g}", worst)};
}

CheckResult slnr_reductions() {
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> g(0.0, 1.0);
    CVector h(8);
    for (auto& v : h) v = Complex(g(rng), g(rng));
    const CVector cb = cb_precoder(h);
    const CVector sl = slnr_precoder(h, h.transpose(), 1e-2);
    const Complex proj = cb.dot(sl);
    const double angle = std::atan2((sl - proj * cb).norm(), std::abs(proj));

    CMatrix stacked = CMatrix::Zero(2, 8);
    stacked(0, 0) = 1.0;
    stacked(1, 1) = Complex(0.0, 1.0);
    const CVector p1 = slnr_precoder(stacked.row(0).transpose(), stacked, 1e-12);
    const double leak = std::norm((stacked.row(1) * p1).value());
    const bool ok = angle <= 1e-9 && leak <= 1e-18;
    return {ok, fmt::format("angle {:.3g} rad, leakage {:.3g}", angle, leak)};
}

} // namespace

std::vector<SelfCheck> default_selfchecks() {
    return {
        {"ofdm loopback", loopback},
        {"frequency-domain equivalence", frequency_equivalence},
        {"resampler round trip", resampler_round_trip},
        {"slnr reductions", slnr_reductions},
    };
}

SelfCheck injected_failure() {
    return {"injected failure", [] { return CheckResult{false, "failure requested"}; }};
}

SelfCheckReport run_selfcheck(std::span<const SelfCheck> checks) {
    if (checks.empty()) throw EmptyError("no self-checks to run");
    SelfCheckReport report;
    for (const auto& c : checks) {
        report.names.push_back(c.name);
        try {
            report.results.push_back(c.run());
        } catch (const std::exception& e) {
            report.results.push_back({false, fmt::format("threw: {}", e.what())});
        }
    }
    return report;
}

} // namespace mnmimo
