#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mnmimo/log.hpp"
#include "mnmimo/runner.hpp"
#include "mnmimo/seeds.hpp"

using namespace mnmimo;

namespace {

Scenario small() {
    auto s = reference_scenario();
    s.antennas = {8};
    s.drops = 4;
    s.snr_db = {0.0, 20.0};
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string first_line(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    return line;
}

} // namespace

TEST_CASE("seed splitting") {
    CHECK(mix64(0) == 0);
    // First outputs of SplitMix64 seeded with 0.
    CHECK(split_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(split_seed(0, 1) == 0x6E789E6AA1B965F4ULL);
    CHECK(split_seed(1, 0) != split_seed(0, 0));
}

TEST_CASE("fnv1a") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("parallel_for covers every index and forwards exceptions") {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 5) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
    parallel_for(0, 2, [](std::size_t) { FAIL("called"); });
}

TEST_CASE("drop channels are paired across array sizes") {
    const auto s = reference_scenario();
    const auto a = draw_drop_channels(s, 2, 77);
    const auto b = draw_drop_channels(s, 16, 77);
    CHECK(a.fine_grid.size() == 2);
    CHECK(a.own_grid.users[1][0].rows() == 288);
    CHECK(b.fine_grid[1].rows() == 576);
    CHECK((a.realizations[0].gains.col(0) - b.realizations[0].gains.col(0)).norm() < 1e-14);
}

TEST_CASE("a lone user with many antennas is clean at 50 dB") {
    auto s = reference_scenario();
    s.user_angles_deg = {{135.0}, {}};
    for (std::uint64_t d = 0; d < 5; ++d)
        CHECK(simulate_drop_evm(s, 16, PrecoderMethod::SLNR, 50.0, d).overall.db <= -45.0);
}

TEST_CASE("SLNR beats CB on paired seeds at 16 antennas") {
    const auto s = reference_scenario();
    int wins = 0;
    for (std::uint64_t d = 0; d < 10; ++d) {
        const auto sl = simulate_drop_evm(s, 16, PrecoderMethod::SLNR, 50.0, split_seed(1, d));
        const auto cb = simulate_drop_evm(s, 16, PrecoderMethod::CB, 50.0, split_seed(1, d));
        wins += sl.overall.db < cb.overall.db;
    }
    CHECK(wins >= 9);
}

TEST_CASE("per-symbol EVM layout") {
    const auto s = reference_scenario();
    const auto e = simulate_drop_evm(s, 8, PrecoderMethod::CB, 50.0, 3, true);
    REQUIRE(e.users.size() == 2);
    CHECK(e.users[0].size() == 1);
    CHECK(e.users[1].size() == 2);
    CHECK(e.points.size() == 576 + 2 * 288);
}

TEST_CASE("capacity vanishes at very low SNR and grows with SNR") {
    auto s = small();
    s.snr_db = {-60.0, 0.0, 30.0};
    const auto d = simulate_drop_capacity(s, 8, 5);
    REQUIRE(d.size() == 3);
    CHECK(d[0].c_su < 1e-4);
    CHECK(d[0].c_switched[0] < 1e-4);
    CHECK(d[1].c_su < d[2].c_su);
    for (const auto& x : d)
        for (std::size_t a = 0; a < 2; ++a) CHECK(x.c_switched[a] >= x.c_su - 1e-12);
}

TEST_CASE("sweeps do not depend on the job count") {
    log::set_level(log::Level::Quiet);
    const auto s = small();
    const auto a = run_capacity_sweep(s, {1});
    const auto b = run_capacity_sweep(s, {3});
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].c_mean == b.rows[i].c_mean);
    CHECK(a.rows.size() == 2 * 3);
    CHECK(a.gains.size() == 2);
}

TEST_CASE("output files and headers") {
    auto s = small();
    s.drops = 2;
    s.snr_db = {50.0};
    const auto dir = std::filesystem::temp_directory_path() / "mnmimo_runner_test";
    std::filesystem::remove_all(dir);

    s.raw_samples = true;
    const auto c = run_constellation(s);
    write_constellation_outputs(c, s, dir);
    CHECK(first_line(dir / "evm_records.csv") == "scenario,antennas,method,snr_db,seed,user,symbol,metric,value");
    CHECK(first_line(dir / "evm_summary.csv") == "scenario,antennas,method,snr_db,user,symbol,metric,drops,mean,std,median");
    CHECK(first_line(dir / "constellation_M8_SLNR_snr50_drop0.csv") == "re,im,ideal_re,ideal_im,user,symbol_idx");
    CHECK_FALSE(std::filesystem::exists(dir / "constellation_M8_SLNR_snr50_drop1.csv"));
    const auto raw = read_sample_dump(dir / "samples" / "tx_M8_CB_snr50_drop0_ant7.bin");
    CHECK(raw.sample_rate == doctest::Approx(30.72e6));
    CHECK(raw.samples.size() == 2048 + 424);
    CHECK(std::filesystem::file_size(dir / "samples" / "tx_M8_CB_snr50_drop0_ant7.bin") == 8 + 8 + 8 + 2472 * 16);

    s.snr_db = {0.0, 10.0};
    const auto k = run_capacity_sweep(s);
    write_capacity_outputs(k, s, dir);
    CHECK(first_line(dir / "capacity.csv") == "scenario,antennas,method,snr_db,drops,c_mean,c_std,c_mu_mean,c_mu_std");
    CHECK(first_line(dir / "capacity_gains.csv") == "scenario,antennas,method,target_capacity,snr_su_db,snr_mu_db,gain_db");
    CHECK(first_line(dir / "capacity_su_users.csv") == "scenario,antennas,user,snr_db,drops,c_mean,c_std");

    write_manifest(make_manifest("capacity", "text", s), s, dir);
    const auto m = slurp(dir / "manifest.json");
    CHECK(m.find(fnv1a_hex("text")) != std::string::npos);
    CHECK(m.find("snr_convention") != std::string::npos);
    std::filesystem::remove_all(dir);
}
