#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mnmimo/analysis.hpp"
#include "mnmimo/errors.hpp"
#include "mnmimo/phy.hpp"
#include "oracles.hpp"

using namespace mnmimo;

namespace {

NumerologySet single(std::size_t used) {
    return validate_numerology_set({{15e3, 2048, 424, 14}}, true, -std::floor(used / 2.0) * 15e3);
}

NumerologySet table() {
    return validate_numerology_set({{15e3, 2048, 424, 14}, {30e3, 1024, 212, 14}}, true, -4.32e6);
}

PrecoderSet unit_precoders(std::size_t groups, std::size_t used) {
    PrecoderSet p;
    p.groups.resize(groups);
    for (auto& g : p.groups) g.subbands.assign(p.layout.count(used), CMatrix::Ones(1, 1));
    return p;
}

PrecoderSet random_precoders(const std::vector<std::size_t>& k, std::size_t m,
                             const std::vector<std::size_t>& used, std::mt19937_64& rng) {
    PrecoderSet p;
    std::size_t total = 0;
    for (auto x : k) total += x;
    p.stream_scale = 1.0 / std::sqrt(static_cast<double>(total));
    p.groups.resize(k.size());
    for (std::size_t t = 0; t < k.size(); ++t)
        for (std::size_t sb = 0; sb < p.layout.count(used[t]); ++sb) {
            CMatrix c = oracle::random_matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k[t]), rng);
            c.colwise().normalize();
            p.groups[t].subbands.push_back(c);
        }
    return p;
}

} // namespace

TEST_CASE("single active subcarrier is a complex exponential with CP") {
    const std::size_t used = 64;
    const auto set = single(used);
    GroupPayload pay;
    pay.symbols.push_back(CMatrix::Zero(1, static_cast<Eigen::Index>(used)));
    pay.symbols[0](0, 40) = 1.0;
    const CMatrix x = modulate_group(pay, unit_precoders(1, used), set, {0, used, false});
    REQUIRE(x.cols() == 2472);
    const double k = static_cast<double>(subcarrier_bin(set.group(0), 40, set));
    for (Eigen::Index n = 0; n < 2472; n += 7) {
        const double t = static_cast<double>(n - 424);
        const Complex expect = std::polar(1.0 / std::sqrt(64.0), 2.0 * kPi * k * t / 2048.0);
        CHECK(std::abs(x(0, n) - expect) < 1e-12);
    }
}

TEST_CASE("zero payload gives zero samples") {
    const auto set = single(48);
    GroupPayload pay;
    pay.symbols.push_back(CMatrix::Zero(1, 48));
    CHECK(modulate_group(pay, unit_precoders(1, 48), set, {0, 48, false}).norm() == 0.0);
}

TEST_CASE("loopback recovers P s per subcarrier") {
    std::mt19937_64 rng(1);
    const std::size_t used = 600;
    const auto set = single(used);
    const auto payload = random_payload(set, {3}, {used}, Constellation::QAM64, 5);
    const auto p = random_precoders({3}, 4, {used}, rng);
    const GroupLayout layout{0, used, false};
    const auto frame = superpose({modulate_group(payload.groups[0], p, set, layout)}, set.sample_rate());
    // Read antenna 2 alone through a channel that selects it.
    ChannelRealization pick;
    pick.gains = CMatrix::Zero(1, 4);
    pick.gains(0, 2) = 1.0;
    pick.delays = {0};
    pick.sample_rate = set.sample_rate();
    const CMatrix obs = demodulate_user(apply_channel(frame, pick, 0.0, 0), set, layout);
    double worst = 0.0;
    for (std::size_t j = 0; j < used; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        CVector s(3);
        for (int u = 0; u < 3; ++u) s(u) = payload.groups[0].symbols[static_cast<std::size_t>(u)](0, jj);
        const Complex expect = p.stream_scale * (p.groups[0].subbands[j / 48].row(2) * s).value();
        worst = std::max(worst, std::abs(obs(0, jj) - expect));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("pure tone demodulates to a delta") {
    const std::size_t used = 32;
    const auto set = single(used);
    AntennaFrame f;
    f.sample_rate = set.sample_rate();
    f.samples.resize(1, 2472);
    const double k = static_cast<double>(subcarrier_bin(set.group(0), 9, set));
    for (Eigen::Index n = 0; n < 2472; ++n) f.samples(0, n) = std::polar(1.0, 2.0 * kPi * k * (n - 424) / 2048.0);
    const CMatrix obs = demodulate_user(apply_channel(f, identity_channel(1, f.sample_rate), 0.0, 0), set, {0, used, false});
    for (Eigen::Index j = 0; j < 32; ++j) {
        if (j == 9) CHECK(std::abs(obs(0, j)) == doctest::Approx(std::sqrt(32.0)));
        else CHECK(std::abs(obs(0, j)) < 1e-10);
    }
}

TEST_CASE("the 30 kHz group yields two symbols per time unit") {
    const auto set = table();
    const CVector y = CVector::Zero(2472);
    CHECK(demodulate_user(y, set, {1, 288, false}).rows() == 2);
    CHECK(demodulate_user(y, set, {0, 576, false}).rows() == 1);
    CHECK_THROWS_AS(demodulate_user(CVector::Zero(2000), set, {0, 576, false}), LengthError);
}

TEST_CASE("superpose") {
    std::mt19937_64 rng(2);
    const CMatrix a = oracle::random_matrix(3, 10, rng);
    CHECK(superpose({a}, 1.0).samples == a);
    CHECK(superpose({a, CMatrix::Zero(3, 10)}, 1.0).samples == a);
    CHECK_THROWS_AS(superpose({a, CMatrix::Zero(3, 9)}, 1.0), LengthError);
    CHECK_THROWS_AS(superpose({}, 1.0), LengthError);
}

TEST_CASE("superposed power is the sum of group powers") {
    std::mt19937_64 rng(3);
    const auto set = table();
    double sum_groups = 0.0;
    double sum_total = 0.0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto payload = random_payload(set, {1, 1}, {576, 288}, Constellation::QAM16, s);
        const auto p = random_precoders({1, 1}, 4, {576, 288}, rng);
        const CMatrix a = modulate_group(payload.groups[0], p, set, {0, 576, false});
        const CMatrix b = modulate_group(payload.groups[1], p, set, {1, 288, false});
        sum_groups += a.squaredNorm() + b.squaredNorm();
        sum_total += superpose({a, b}, set.sample_rate()).samples.squaredNorm();
    }
    CHECK(sum_total == doctest::Approx(sum_groups).epsilon(0.02));
}

TEST_CASE("transmit power per sample is K_t / K_total") {
    std::mt19937_64 rng(4);
    const auto set = single(600);
    const auto payload = random_payload(set, {2}, {600}, Constellation::QAM16, 9);
    auto p = random_precoders({2}, 8, {600}, rng);
    p.stream_scale = 1.0 / std::sqrt(4.0); // two more users elsewhere
    const CMatrix x = modulate_group(payload.groups[0], p, set, {0, 600, false});
    const double per_sample = x.rightCols(2048).squaredNorm() / 2048.0;
    CHECK(per_sample == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("apply_channel: sum over antennas, delays, noise") {
    std::mt19937_64 rng(5);
    AntennaFrame f;
    f.sample_rate = 1.0;
    f.samples = oracle::random_matrix(3, 100, rng);
    const CVector y = apply_channel(f, identity_channel(3, 1.0), 0.0, 0);
    CHECK((y - f.samples.colwise().sum().transpose()).norm() < 1e-12);

    ChannelRealization d;
    d.gains = CMatrix::Zero(1, 3);
    d.gains(0, 0) = 1.0;
    d.delays = {5};
    d.sample_rate = 1.0;
    const CVector z = apply_channel(f, d, 0.0, 0);
    CHECK(z.head(5).norm() == 0.0);
    CHECK((z.tail(95) - f.samples.row(0).head(95).transpose()).norm() < 1e-15);

    AntennaFrame prev;
    prev.sample_rate = 1.0;
    prev.samples = oracle::random_matrix(3, 100, rng);
    const CVector w = apply_channel(f, d, 0.0, 0, &prev);
    CHECK((w.head(5) - prev.samples.row(0).tail(5).transpose()).norm() < 1e-15);

    d.delays = {100};
    CHECK_THROWS_AS(apply_channel(f, d, 0.0, 0), DelayError);
}

TEST_CASE("AWGN variance") {
    AntennaFrame f;
    f.sample_rate = 1.0;
    f.samples = CMatrix::Zero(1, 1000000);
    const CVector n = apply_channel(f, identity_channel(1, 1.0), 0.37, 11);
    CHECK(n.squaredNorm() / 1e6 == doctest::Approx(0.37).epsilon(0.01));
    CHECK(noise_variance_per_sample(20.0, 0.25) == doctest::Approx(0.04));
}

TEST_CASE("equalize") {
    CHECK(equalize(Complex(2, 0), Complex(0, 2), 0.0) == Complex(0, -1));
    CHECK(equalize(2.0, 1.0, 1.0) == Complex(1.0));
    CHECK(equalize(2.0, 0.0, 0.0) == Complex(0.0));
}

TEST_CASE("demodulated noise variance is 1/snr per subcarrier") {
    const auto set = table();
    const double occ = 576.0 / 2048.0;
    const double nv = noise_variance_per_sample(17.0, occ);
    CHECK(demodulated_noise_variance(nv, set, {0, 576, false}) == doctest::Approx(1.0 / db_to_linear(17.0)));
    CHECK(demodulated_noise_variance(nv, set, {1, 288, false}) == doctest::Approx(1.0 / db_to_linear(17.0)));

    AntennaFrame f;
    f.sample_rate = set.sample_rate();
    f.samples = CMatrix::Zero(1, 2472);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const CMatrix obs = demodulate_user(apply_channel(f, identity_channel(1, f.sample_rate), nv, s), set, {0, 576, false});
        acc += obs.squaredNorm() / 576.0;
    }
    CHECK(acc / 50.0 == doctest::Approx(1.0 / db_to_linear(17.0)).epsilon(0.03));
}

TEST_CASE("16QAM at 50 dB over an ideal channel") {
    const std::size_t used = 576;
    const auto set = single(used);
    const auto payload = random_payload(set, {1}, {used}, Constellation::QAM16, 3);
    const GroupLayout layout{0, used, false};
    const auto frame = superpose({modulate_group(payload.groups[0], unit_precoders(1, used), set, layout)}, set.sample_rate());
    const double nv = noise_variance_per_sample(50.0, static_cast<double>(used) / 2048.0);
    const CMatrix obs = demodulate_user(apply_channel(frame, identity_channel(1, set.sample_rate()), nv, 4), set, layout);
    const double bin_nv = demodulated_noise_variance(nv, set, layout);
    std::vector<Complex> rx;
    std::vector<Complex> ideal;
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
        rx.push_back(equalize(obs(0, j), 1.0, bin_nv));
        ideal.push_back(payload.groups[0].symbols[0](0, j));
    }
    CHECK(evm(rx, ideal).db <= -45.0);
}

TEST_CASE("mixed numerologies interfere even on ideal channels") {
    std::mt19937_64 rng(6);
    const auto set = table();
    const auto payload = random_payload(set, {1, 1}, {576, 288}, Constellation::QAM16, 1);
    const auto p = random_precoders({1, 1}, 2, {576, 288}, rng);
    const CMatrix b = modulate_group(payload.groups[1], p, set, {1, 288, false});
    // Only the 30 kHz group transmits; the 15 kHz receiver sees its leakage.
    const auto frame = superpose({b}, set.sample_rate());
    const CMatrix obs = demodulate_user(apply_channel(frame, identity_channel(2, set.sample_rate()), 0.0, 0), set, {0, 576, false});
    double odd = 0.0;
    for (Eigen::Index j = 1; j < 576; j += 2) odd += std::norm(obs(0, j));
    CHECK(odd > 1e-3);
}

TEST_CASE("null_dc zeroes the DC subcarrier") {
    const auto set = single(64);
    GroupPayload pay;
    pay.symbols.push_back(CMatrix::Ones(1, 64));
    const GroupLayout layout{0, 64, true};
    const auto frame = superpose({modulate_group(pay, unit_precoders(1, 64), set, layout)}, set.sample_rate());
    const CMatrix obs = demodulate_user(apply_channel(frame, identity_channel(1, set.sample_rate()), 0.0, 0), set, layout);
    CHECK(std::abs(obs(0, 32)) < 1e-12);
    CHECK(std::abs(obs(0, 31) - 1.0) < 1e-12);
}

TEST_CASE("sample dump round trip") {
    std::mt19937_64 rng(7);
    AntennaFrame f;
    f.sample_rate = 30.72e6;
    f.samples = oracle::random_matrix(2, 50, rng);
    const auto dir = std::filesystem::temp_directory_path() / "mnmimo_dump_test";
    const auto files = write_sample_dump(f, dir, "frame");
    REQUIRE(files.size() == 2);
    CHECK(std::filesystem::file_size(files[1]) == 24 + 50 * 16);
    const auto back = read_sample_dump(files[1]);
    CHECK(back.sample_rate == 30.72e6);
    CHECK(back.samples == f.samples.row(1).transpose());
    std::filesystem::remove_all(dir);
}
