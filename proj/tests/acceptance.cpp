// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mnmimo/channel.hpp"
#include "mnmimo/log.hpp"
#include "mnmimo/phy.hpp"
#include "mnmimo/precoding.hpp"
#include "mnmimo/resampling.hpp"
#include "mnmimo/runner.hpp"
#include "mnmimo/scenario.hpp"
#include "mnmimo/seeds.hpp"

using namespace mnmimo;

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

// Tolerances and limits, pinned.
constexpr double kLoopbackTol = 1e-10;
constexpr double kEquivalenceTol = 1e-9;
constexpr double kInterpRelTol = 0.01;
constexpr double kDecimationTol = 1e-12;
constexpr double kAngleTol = 1e-9;
constexpr double kLeakageTol = 1e-18;
constexpr double kM2MinGainDb = 1.0;
constexpr double kCbSaturationDb = 1.0;
constexpr std::size_t kEvmDrops = 100;
constexpr std::size_t kCapacityDrops = 200;

// h(f) = sum_taps g exp(-i 2 pi f tau), straight from the tap list.
CMatrix direct_response(const ChannelRealization& ch, const std::vector<double>& f) {
    CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(f.size()), ch.gains.cols());
    for (std::size_t j = 0; j < f.size(); ++j)
        for (std::size_t i = 0; i < ch.num_taps(); ++i) {
            const double tau = static_cast<double>(ch.delays[i]) / ch.sample_rate;
            const Complex rot = std::polar(1.0, -2.0 * kPi * f[j] * tau);
            h.row(static_cast<Eigen::Index>(j)) += rot * ch.gains.row(static_cast<Eigen::Index>(i));
        }
    return h;
}

NumerologySet table_group(std::size_t used) {
    const double scs = 15e3;
    return validate_numerology_set({Numerology{scs, 2048, 424, 14}}, true,
                                   -std::floor(static_cast<double>(used) / 2.0) * scs);
}

PrecoderSet random_precoders(std::size_t m, std::size_t k, std::size_t used, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    PrecoderSet p;
    p.stream_scale = 1.0 / std::sqrt(static_cast<double>(k));
    p.groups.resize(1);
    for (std::size_t sb = 0; sb < p.layout.count(used); ++sb) {
        CMatrix c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        for (Eigen::Index r = 0; r < c.rows(); ++r)
            for (Eigen::Index q = 0; q < c.cols(); ++q) c(r, q) = Complex(g(rng), g(rng));
        p.groups[0].subbands.push_back(c);
    }
    return p;
}

Outcome loopback() {
    const std::size_t used = 576;
    const auto set = table_group(used);
    const auto payload = random_payload(set, {1}, {used}, Constellation::QAM16, 11);
    PrecoderSet p;
    p.groups.resize(1);
    p.groups[0].subbands.assign(p.layout.count(used), CMatrix::Ones(1, 1));
    const GroupLayout layout{0, used, false};
    const auto frame = superpose({modulate_group(payload.groups[0], p, set, layout)}, set.sample_rate());
    const CVector y = apply_channel(frame, identity_channel(1, set.sample_rate()), 0.0, 0);
    const CMatrix obs = demodulate_user(y, set, layout);
    const double err = (obs - payload.groups[0].symbols[0]).cwiseAbs().maxCoeff();
    return {err <= kLoopbackTol, fmt::format("max |error| {:.3g} (tol {:g})", err, kLoopbackTol)};
}

Outcome equivalence() {
    const std::size_t used = 576;
    const std::size_t m = 4;
    const std::size_t k = 2;
    const auto set = table_group(used);
    const auto& n = set.group(0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> delay(0, n.cp_len);
        std::vector<std::size_t> d(5);
        for (auto& x : d) x = delay(rng);
        std::sort(d.begin(), d.end());
        TapProfile profile{"random", {}};
        for (auto x : d) profile.taps.push_back({static_cast<double>(x) / set.sample_rate(), 0.0, {}});
        ArrayGeometry geometry;
        geometry.num_elements = m;
        ChannelOptions opts;
        opts.sample_rate = set.sample_rate();
        const auto ch = generate_realization(profile, geometry, 70.0, seed, opts);

        const auto payload = random_payload(set, {k}, {used}, Constellation::QAM16, seed + 100);
        const auto p = random_precoders(m, k, used, rng);
        const GroupLayout layout{0, used, false};
        const auto frame = superpose({modulate_group(payload.groups[0], p, set, layout)}, set.sample_rate());
        const CMatrix obs = demodulate_user(apply_channel(frame, ch, 0.0, 0), set, layout);

        std::vector<double> f(used);
        for (std::size_t j = 0; j < used; ++j) f[j] = set.anchor_hz() + static_cast<double>(j) * n.scs_hz;
        const CMatrix h = direct_response(ch, f);
        for (std::size_t j = 0; j < used; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            CVector s(static_cast<Eigen::Index>(k));
            for (std::size_t u = 0; u < k; ++u) s(static_cast<Eigen::Index>(u)) = payload.groups[0].symbols[u](0, jj);
            const CVector x = p.stream_scale * (p.groups[0].subbands[j / p.layout.size] * s);
            Complex expect = 0.0;
            for (Eigen::Index a = 0; a < x.size(); ++a) expect += h(jj, a) * x(a);
            worst = std::max(worst, std::abs(obs(0, jj) - expect));
        }
    }
    return {worst <= kEquivalenceTol,
            fmt::format("max |error| {:.3g} over 10 seeds (tol {:g})", worst, kEquivalenceTol)};
}

Outcome resampling() {
    const auto s = reference_scenario();
    const auto& set = s.numerologies;
    const auto fine = subcarrier_grid(set.group(0), s.used_subcarriers[0], set);
    const auto coarse = subcarrier_grid(set.group(1), s.used_subcarriers[0] / 2, set);
    const auto spec = ResampleSpec::make(2, 1, 33);
    double err2 = 0.0;
    double mag2 = 0.0;
    double dec = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ch = generate_realization(s.profile, s.geometry_for(16), 45.0, split_seed(7, seed), s.channel);
        const CMatrix hf = direct_response(ch, fine);
        const CMatrix hc = direct_response(ch, coarse);
        const CMatrix up = resample_columns(hc, 2, 1, spec);
        err2 += (up - hf).squaredNorm();
        mag2 += hf.squaredNorm();
        const CMatrix down = resample_columns(hf, 1, 2, spec);
        dec = std::max(dec, (down - hc).cwiseAbs().maxCoeff());
    }
    const double rel = std::sqrt(err2 / mag2);
    return {rel <= kInterpRelTol && dec <= kDecimationTol,
            fmt::format("interpolation RMS error {:.3g}% of RMS |h| (tol {:g}%), decimation max |error| {:.3g}",
                        100.0 * rel, 100.0 * kInterpRelTol, dec)};
}

Outcome slnr() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    auto random_vec = [&](Eigen::Index m) {
        CVector v(m);
        for (auto& x : v) x = Complex(g(rng), g(rng));
        return v;
    };
    double angle = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const CVector h = random_vec(16);
        const CVector sl = slnr_precoder(h, h.transpose(), 0.1 + trial);
        const CVector cb = h.conjugate().normalized();
        // atan2 of orthogonal residual and projection; acos loses ~1e-8 near zero.
        const Complex proj = cb.dot(sl);
        const double resid = (sl - proj * cb).norm();
        angle = std::max(angle, std::atan2(resid, std::abs(proj)));
    }
    double leak = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const CVector h1 = random_vec(16);
        CVector h2 = random_vec(16);
        // Orthogonal in the sense h1 h2^H = 0.
        h2 -= (h1.conjugate().dot(h2.conjugate()) / h1.squaredNorm()) * h1;
        CMatrix stacked(2, 16);
        stacked.row(0) = h1.transpose();
        stacked.row(1) = h2.transpose();
        const CVector p1 = slnr_precoder(h1, stacked, 1e-12);
        Complex l = 0.0;
        for (Eigen::Index a = 0; a < 16; ++a) l += h2(a) * p1(a);
        leak = std::max(leak, std::norm(l));
    }
    return {angle <= kAngleTol && leak <= kLeakageTol,
            fmt::format("max angle {:.3g} rad (tol {:g}), max leakage {:.3g} (tol {:g})", angle,
                        kAngleTol, leak, kLeakageTol)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome evm_ordering() {
    const auto s = reference_scenario();
    auto med = [&](std::size_t m, PrecoderMethod method) {
        std::vector<double> v;
        for (std::size_t i = 0; i < kEvmDrops; ++i)
            v.push_back(simulate_drop_evm(s, m, method, 50.0, split_seed(s.master_seed, i)).overall.percent);
        return median(v);
    };
    const double sl2 = med(2, PrecoderMethod::SLNR);
    const double sl8 = med(8, PrecoderMethod::SLNR);
    const double sl16 = med(16, PrecoderMethod::SLNR);
    const double cb16 = med(16, PrecoderMethod::CB);
    const bool ok = sl16 < sl8 && sl8 < sl2 && sl16 < cb16;
    return {ok, fmt::format("median EVM % over {} drops: SLNR(2) {:.3g}, SLNR(8) {:.3g}, SLNR(16) {:.3g}, CB(16) {:.3g}",
                            kEvmDrops, sl2, sl8, sl16, cb16)};
}

struct Gains {
    double cb[3];
    double slnr[3];
};

Gains capacity_gains() {
    auto s = reference_scenario();
    s.drops = kCapacityDrops;
    s.snr_db.clear();
    for (int x = -10; x <= 40; x += 2) s.snr_db.push_back(x);
    const auto r = run_capacity_sweep(s);
    Gains g{};
    for (const auto& row : r.gains) {
        const int idx = row.antennas == 2 ? 0 : row.antennas == 8 ? 1 : 2;
        (row.method == "CB" ? g.cb : g.slnr)[idx] = row.gain_db;
    }
    return g;
}

Outcome capacity_ordering(const Gains& g) {
    const bool ok = g.slnr[2] > g.slnr[1] && g.slnr[1] > 0.0 && g.slnr[1] > g.cb[1] &&
                    g.cb[0] > kM2MinGainDb && g.slnr[0] > kM2MinGainDb;
    return {ok, fmt::format("SNR gain dB at 6 bits/s/Hz over {} drops: CB(2) {:.3g}, SLNR(2) {:.3g}, CB(8) {:.3g}, "
                            "SLNR(8) {:.3g}, CB(16) {:.3g}, SLNR(16) {:.3g}; M=2 needs > {:g}",
                            kCapacityDrops, g.cb[0], g.slnr[0], g.cb[1], g.slnr[1], g.cb[2], g.slnr[2],
                            kM2MinGainDb)};
}

Outcome cb_saturation(const Gains& g) {
    return {g.cb[2] <= g.cb[1] + kCbSaturationDb,
            fmt::format("gain CB(16) {:.3g} dB vs CB(8) {:.3g} dB + {:g}", g.cb[2], g.cb[1], kCbSaturationDb)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto base = std::filesystem::temp_directory_path() / fmt::format("mnsim_det_{}", ::getpid());
    std::filesystem::remove_all(base);
    const std::vector<std::string> files{"capacity.csv", "capacity_gains.csv", "capacity_su_users.csv"};
    for (const char* run : {"a", "b"}) {
        const auto cmd = fmt::format("\"{}\" capacity -q --config \"{}\" --seed 42 --drops 40 --jobs {} --out \"{}\"",
                                     MNSIM_PATH, REFERENCE_CONFIG, run[0] == 'a' ? 1 : 3,
                                     (base / run).string());
        if (std::system(cmd.c_str()) != 0) return {false, "mnsim capacity exited non-zero"};
    }
    bool same = true;
    for (const auto& f : files) same = same && slurp(base / "a" / f) == slurp(base / "b" / f) &&
                                      !slurp(base / "a" / f).empty();
    std::filesystem::remove_all(base);
    return {same, same ? "CSV outputs byte-identical (1 vs 3 jobs)" : "CSV outputs differ"};
}

} // namespace

int main() {
    log::set_level(log::Level::Quiet);
    int failures = 0;
    auto report = [&](int id, const char* name, double limit_s, const std::function<Outcome()>& fn,
                      double shared_s = 0.0) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        const double secs =
            shared_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = o.passed && secs <= limit_s;
        if (!ok) ++failures;
        fmt::print("{} criterion {} ({}): {} [{:.2f} s, limit {:g} s]\n", ok ? "PASS" : "FAIL", id, name,
                   o.detail, secs, limit_s);
        std::fflush(stdout);
    };

    report(1, "loopback exactness", 1.0, loopback);
    report(2, "frequency-domain equivalence", 10.0, equivalence);
    report(3, "resampling fidelity", 5.0, resampling);
    report(4, "SLNR reductions", 1.0, slnr);
    report(5, "EVM ordering", 300.0, evm_ordering);

    Gains gains{};
    const auto t0 = std::chrono::steady_clock::now();
    bool sweep_ok = true;
    std::string sweep_error;
    try {
        gains = capacity_gains();
    } catch (const std::exception& e) {
        sweep_ok = false;
        sweep_error = e.what();
    }
    const double sweep_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(6, "capacity ordering", 600.0, [&] {
        if (!sweep_ok) return Outcome{false, sweep_error};
        return capacity_ordering(gains);
    }, sweep_s);
    report(7, "CB saturation", 600.0, [&] {
        if (!sweep_ok) return Outcome{false, sweep_error};
        return cb_saturation(gains);
    }, sweep_s);
    report(8, "determinism", 60.0, determinism);
    return failures == 0 ? 0 : 1;
}
