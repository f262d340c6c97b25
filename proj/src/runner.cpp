#include "mnmimo/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mnmimo/errors.hpp"
#include "mnmimo/phy.hpp"
#include "mnmimo/seeds.hpp"

namespace mnmimo {

namespace {

// Stream ids inside one drop.
constexpr std::uint64_t kPayloadStream = 1000;
constexpr std::uint64_t kNoiseStream = 2000;

struct UserRef {
    std::size_t group;
    std::size_t user;
    double angle;
};

std::vector<UserRef> stacked_users(const Scenario& s) {
    std::vector<UserRef> refs;
    for (std::size_t t = 0; t < s.num_groups(); ++t)
        for (std::size_t u = 0; u < s.user_angles_deg[t].size(); ++u)
            refs.push_back({t, u, s.user_angles_deg[t][u]});
    return refs;
}

GroupLayout layout_of(const Scenario& s, std::size_t t) {
    return GroupLayout{t, s.used_subcarriers[t], s.null_dc};
}

PrecoderOptions precoder_options(const Scenario& s, PrecoderMethod method, double sigma2) {
    PrecoderOptions o;
    o.method = method;
    o.sigma2 = sigma2;
    o.subband_size = s.subband_size;
    o.normalization = s.normalization;
    o.filter_len = s.filter_len;
    return o;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{:.9g}", v);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    return os;
}

} // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

DropChannels draw_drop_channels(const Scenario& scenario, std::size_t antennas,
                                std::uint64_t drop_seed) {
    const auto geometry = scenario.geometry_for(antennas);
    const auto& set = scenario.numerologies;
    const auto users = stacked_users(scenario);
    const auto fine = subcarrier_grid(set.group(0), scenario.used_subcarriers[0], set);

    DropChannels d;
    d.own_grid.users.resize(scenario.num_groups());
    for (std::size_t k = 0; k < users.size(); ++k) {
        const auto& ref = users[k];
        auto ch = generate_realization(scenario.profile, geometry, ref.angle,
                                       split_seed(drop_seed, k), scenario.channel);
        const auto grid = subcarrier_grid(set.group(ref.group), scenario.used_subcarriers[ref.group], set);
        d.own_grid.users[ref.group].push_back(frequency_response(ch, grid));
        d.fine_grid.push_back(ref.group == 0 ? d.own_grid.users[0].back() : frequency_response(ch, fine));
        d.realizations.push_back(std::move(ch));
    }
    return d;
}

DropEvm simulate_drop_evm(const Scenario& scenario, std::size_t antennas, PrecoderMethod method,
                          double snr_db, std::uint64_t drop_seed, bool keep_points) {
    const auto& set = scenario.numerologies;
    const auto users = stacked_users(scenario);
    const auto channels = draw_drop_channels(scenario, antennas, drop_seed);

    const double snr = db_to_linear(snr_db);
    const auto precoders =
        build_precoder_set(channels.own_grid, set, precoder_options(scenario, method, 1.0 / snr));
    const auto payload = random_payload(set, scenario.users_per_group(), scenario.used_subcarriers,
                                        scenario.constellation, split_seed(drop_seed, kPayloadStream));

    std::vector<CMatrix> blocks;
    for (std::size_t t = 0; t < scenario.num_groups(); ++t) {
        if (payload.groups[t].symbols.empty()) continue;
        blocks.push_back(modulate_group(payload.groups[t], precoders, set, layout_of(scenario, t)));
    }
    const auto frame = superpose(blocks, set.sample_rate());
    const double noise_var = noise_variance_per_sample(snr_db, scenario.occupancy());

    DropEvm result;
    std::vector<Complex> all_rx;
    std::vector<Complex> all_ideal;
    for (std::size_t k = 0; k < users.size(); ++k) {
        const auto& ref = users[k];
        const auto layout = layout_of(scenario, ref.group);
        const auto& n = set.group(ref.group);
        const CVector y = apply_channel(frame, channels.realizations[k], noise_var,
                                        split_seed(drop_seed, kNoiseStream + k));
        const CMatrix obs = demodulate_user(y, set, layout);
        const double bin_noise = demodulated_noise_variance(noise_var, set, layout);
        const CMatrix& h = channels.own_grid.users[ref.group][ref.user];
        const CMatrix& ideal = payload.groups[ref.group].symbols[ref.user];

        std::vector<Evm> per_symbol;
        std::vector<Complex> user_rx;
        std::vector<Complex> user_ideal;
        for (Eigen::Index s = 0; s < obs.rows(); ++s) {
            std::vector<Complex> rx;
            std::vector<Complex> id;
            for (std::size_t j = 0; j < layout.used; ++j) {
                if (layout.null_dc && subcarrier_bin(n, j, set) == 0) continue;
                const auto jj = static_cast<Eigen::Index>(j);
                const Complex g = precoders.stream_scale *
                                  (h.row(jj) * precoders.column(ref.group, ref.user, j)).value();
                const Complex est = equalize(obs(s, jj), g, bin_noise);
                rx.push_back(est);
                id.push_back(ideal(s, jj));
                if (keep_points)
                    result.points.push_back({est, ideal(s, jj), static_cast<int>(k), static_cast<int>(s)});
            }
            per_symbol.push_back(evm(rx, id));
            user_rx.insert(user_rx.end(), rx.begin(), rx.end());
            user_ideal.insert(user_ideal.end(), id.begin(), id.end());
        }
        result.users.push_back(std::move(per_symbol));
        result.user_overall.push_back(evm(user_rx, user_ideal));
        all_rx.insert(all_rx.end(), user_rx.begin(), user_rx.end());
        all_ideal.insert(all_ideal.end(), user_ideal.begin(), user_ideal.end());
    }
    result.overall = evm(all_rx, all_ideal);
    if (keep_points && scenario.raw_samples) result.frame = frame;
    return result;
}

ConstellationResult run_constellation(const Scenario& scenario, const RunOptions& options) {
    ConstellationResult out;
    for (std::size_t m : scenario.antennas)
        for (auto method : scenario.methods)
            for (double snr : scenario.snr_db) {
                std::vector<DropEvm> drops(scenario.drops);
                parallel_for(scenario.drops, options.jobs, [&](std::size_t i) {
                    drops[i] = simulate_drop_evm(scenario, m, method, snr,
                                                 split_seed(scenario.master_seed, i),
                                                 i < scenario.dump_drops);
                });
                for (std::size_t i = 0; i < drops.size(); ++i) {
                    const auto seed = split_seed(scenario.master_seed, i);
                    const std::string tag(to_string(method));
                    auto add = [&](int user, int symbol, const Evm& e) {
                        out.records.push_back({scenario.id, seed, m, snr, tag, "evm_pct", user, symbol, e.percent});
                        out.records.push_back({scenario.id, seed, m, snr, tag, "evm_db", user, symbol, e.db});
                    };
                    add(-1, -1, drops[i].overall);
                    for (std::size_t k = 0; k < drops[i].users.size(); ++k) {
                        add(static_cast<int>(k), -1, drops[i].user_overall[k]);
                        for (std::size_t s = 0; s < drops[i].users[k].size(); ++s)
                            add(static_cast<int>(k), static_cast<int>(s), drops[i].users[k][s]);
                    }
                    if (i < scenario.dump_drops)
                        out.dumps.push_back({m, method, snr, i, std::move(drops[i].points), std::move(drops[i].frame)});
                }
            }
    return out;
}

std::vector<DropCapacity> simulate_drop_capacity(const Scenario& scenario, std::size_t antennas,
                                                 std::uint64_t drop_seed) {
    const auto& set = scenario.numerologies;
    const auto per_group = scenario.users_per_group();
    const std::size_t k_total = scenario.total_users();
    const auto channels = draw_drop_channels(scenario, antennas, drop_seed);
    const std::size_t analysis_sb = scenario.subband_size;

    const auto cb = build_precoder_set(channels.own_grid, set,
                                       precoder_options(scenario, PrecoderMethod::CB, 1.0));
    const auto su_gain = su_beamforming_gain(channels.fine_grid, cb, set, per_group, analysis_sb);
    const std::size_t n_sb = su_gain.front().size();

    std::vector<DropCapacity> out;
    out.reserve(scenario.snr_db.size());
    for (double snr_db : scenario.snr_db) {
        const double snr = db_to_linear(snr_db);
        DropCapacity d;
        std::vector<double> su_per_sb(n_sb);
        d.c_su_user.assign(k_total, 0.0);
        for (std::size_t sb = 0; sb < n_sb; ++sb) {
            std::vector<double> gains(k_total);
            for (std::size_t k = 0; k < k_total; ++k) {
                gains[k] = su_gain[k][sb];
                d.c_su_user[k] += std::log2(1.0 + snr * gains[k]) / static_cast<double>(n_sb);
            }
            su_per_sb[sb] = capacity_su_from_gains(gains, snr);
            d.c_su += su_per_sb[sb] / static_cast<double>(n_sb);
        }

        for (auto method : scenario.methods) {
            const auto precoders =
                method == PrecoderMethod::CB
                    ? cb
                    : build_precoder_set(channels.own_grid, set,
                                         precoder_options(scenario, method, 1.0 / snr));
            const auto sinr = mu_sinr(channels.fine_grid, precoders, set, per_group, snr, analysis_sb);
            std::vector<std::pair<double, double>> su_mu(n_sb);
            double mu_mean = 0.0;
            for (std::size_t sb = 0; sb < n_sb; ++sb) {
                std::vector<double> s(k_total);
                for (std::size_t k = 0; k < k_total; ++k) s[k] = sinr[k][sb];
                const double c_mu = capacity_mu(s);
                su_mu[sb] = {su_per_sb[sb], c_mu};
                mu_mean += c_mu / static_cast<double>(n_sb);
            }
            d.c_mu.push_back(mu_mean);
            d.c_switched.push_back(capacity_switched(su_mu));
        }
        out.push_back(std::move(d));
    }
    return out;
}

CapacityResult run_capacity_sweep(const Scenario& scenario, const RunOptions& options) {
    CapacityResult out;
    const std::size_t n_snr = scenario.snr_db.size();
    const auto summary = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        return std::pair{mean, sd};
    };

    for (std::size_t m : scenario.antennas) {
        std::vector<std::vector<DropCapacity>> drops(scenario.drops);
        parallel_for(scenario.drops, options.jobs, [&](std::size_t i) {
            drops[i] = simulate_drop_capacity(scenario, m, split_seed(scenario.master_seed, i));
        });

        for (std::size_t i = 0; i < drops.size(); ++i) {
            const auto seed = split_seed(scenario.master_seed, i);
            for (std::size_t s = 0; s < n_snr; ++s) {
                const auto& d = drops[i][s];
                const double snr = scenario.snr_db[s];
                out.records.push_back({scenario.id, seed, m, snr, "SU", "c", -1, -1, d.c_su});
                for (std::size_t k = 0; k < d.c_su_user.size(); ++k)
                    out.records.push_back({scenario.id, seed, m, snr, "SU", "c", static_cast<int>(k), -1,
                                           d.c_su_user[k]});
                for (std::size_t a = 0; a < scenario.methods.size(); ++a) {
                    const std::string tag(to_string(scenario.methods[a]));
                    out.records.push_back({scenario.id, seed, m, snr, tag, "c", -1, -1, d.c_switched[a]});
                    out.records.push_back({scenario.id, seed, m, snr, tag, "c_mu", -1, -1, d.c_mu[a]});
                }
            }
        }

        std::vector<double> su_curve(n_snr);
        std::vector<std::vector<double>> mu_curves(scenario.methods.size(), std::vector<double>(n_snr));
        for (std::size_t s = 0; s < n_snr; ++s) {
            std::vector<double> su;
            for (const auto& d : drops) su.push_back(d[s].c_su);
            const auto [su_mean, su_sd] = summary(su);
            su_curve[s] = su_mean;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            out.rows.push_back({m, "SU", scenario.snr_db[s], scenario.drops, su_mean, su_sd, nan, nan});
            for (std::size_t a = 0; a < scenario.methods.size(); ++a) {
                std::vector<double> c;
                std::vector<double> mu;
                for (const auto& d : drops) {
                    c.push_back(d[s].c_switched[a]);
                    mu.push_back(d[s].c_mu[a]);
                }
                const auto [c_mean, c_sd] = summary(c);
                const auto [mu_mean, mu_sd] = summary(mu);
                mu_curves[a][s] = c_mean;
                out.rows.push_back({m, std::string(to_string(scenario.methods[a])), scenario.snr_db[s],
                                    scenario.drops, c_mean, c_sd, mu_mean, mu_sd});
            }
        }

        const double snr_su = snr_at_capacity(scenario.snr_db, su_curve, scenario.target_capacity);
        for (std::size_t a = 0; a < scenario.methods.size(); ++a) {
            const double snr_mu = snr_at_capacity(scenario.snr_db, mu_curves[a], scenario.target_capacity);
            out.gains.push_back({m, std::string(to_string(scenario.methods[a])), scenario.target_capacity,
                                 snr_su, snr_mu, snr_su - snr_mu});
        }
    }
    return out;
}

void write_capacity_outputs(const CapacityResult& result, const Scenario& scenario,
                            const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto os = open_out(dir / "capacity.csv");
        os << "scenario,antennas,method,snr_db,drops,c_mean,c_std,c_mu_mean,c_mu_std\n";
        for (const auto& r : result.rows)
            os << fmt::format("{},{},{},{},{},{},{},{},{}\n", scenario.id, r.antennas, r.method,
                              num(r.snr_db), r.drops, num(r.c_mean), num(r.c_std), num(r.c_mu_mean),
                              num(r.c_mu_std));
    }
    {
        auto os = open_out(dir / "capacity_gains.csv");
        os << "scenario,antennas,method,target_capacity,snr_su_db,snr_mu_db,gain_db\n";
        for (const auto& g : result.gains)
            os << fmt::format("{},{},{},{},{},{},{}\n", scenario.id, g.antennas, g.method,
                              num(g.target_capacity), num(g.snr_su_db), num(g.snr_mu_db),
                              num(g.gain_db));
    }
    {
        std::vector<MetricRecord> users;
        for (const auto& r : result.records)
            if (r.method == "SU" && r.user >= 0) users.push_back(r);
        auto os = open_out(dir / "capacity_su_users.csv");
        os << "scenario,antennas,user,snr_db,drops,c_mean,c_std\n";
        if (!users.empty())
            for (const auto& [key, stats] : aggregate(users))
                os << fmt::format("{},{},{},{},{},{},{}\n", key.scenario, key.antennas, key.user,
                                  num(key.snr_db), stats.count, num(stats.mean), num(stats.stddev));
    }
    nlohmann::ordered_json j;
    j["scenario"] = scenario.id;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : result.rows)
        j["rows"].push_back({{"antennas", r.antennas}, {"method", r.method}, {"snr_db", r.snr_db},
                             {"drops", r.drops}, {"c_mean", r.c_mean}, {"c_std", r.c_std},
                             {"c_mu_mean", std::isnan(r.c_mu_mean) ? nlohmann::json() : nlohmann::json(r.c_mu_mean)},
                             {"c_mu_std", std::isnan(r.c_mu_std) ? nlohmann::json() : nlohmann::json(r.c_mu_std)}});
    j["gains"] = nlohmann::json::array();
    for (const auto& g : result.gains)
        j["gains"].push_back({{"antennas", g.antennas}, {"method", g.method},
                              {"target_capacity", g.target_capacity},
                              {"snr_su_db", std::isnan(g.snr_su_db) ? nlohmann::json() : nlohmann::json(g.snr_su_db)},
                              {"snr_mu_db", std::isnan(g.snr_mu_db) ? nlohmann::json() : nlohmann::json(g.snr_mu_db)},
                              {"gain_db", std::isnan(g.gain_db) ? nlohmann::json() : nlohmann::json(g.gain_db)}});
    auto os = open_out(dir / "capacity_summary.json");
    os << j.dump(2) << '\n';
}

void write_constellation_outputs(const ConstellationResult& result, const Scenario& scenario,
                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto os = open_out(dir / "evm_records.csv");
        os << "scenario,antennas,method,snr_db,seed,user,symbol,metric,value\n";
        for (const auto& r : result.records)
            os << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.scenario, r.antennas, r.method,
                              num(r.snr_db), r.seed, r.user, r.symbol, r.metric, num(r.value));
    }
    nlohmann::ordered_json j;
    j["scenario"] = scenario.id;
    j["summary"] = nlohmann::json::array();
    {
        auto os = open_out(dir / "evm_summary.csv");
        os << "scenario,antennas,method,snr_db,user,symbol,metric,drops,mean,std,median\n";
        if (!result.records.empty())
            for (const auto& [k, s] : aggregate(result.records)) {
                os << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", k.scenario, k.antennas,
                                  k.method, num(k.snr_db), k.user, k.symbol, k.metric, s.count,
                                  num(s.mean), num(s.stddev), num(s.median));
                j["summary"].push_back({{"antennas", k.antennas}, {"method", k.method},
                                        {"snr_db", k.snr_db}, {"user", k.user}, {"symbol", k.symbol},
                                        {"metric", k.metric}, {"drops", s.count}, {"mean", s.mean},
                                        {"std", s.stddev}, {"median", s.median}});
            }
    }
    for (const auto& d : result.dumps) {
        auto os = open_out(dir / fmt::format("constellation_M{}_{}_snr{}_drop{}.csv", d.antennas,
                                             to_string(d.method), num(d.snr_db), d.drop));
        os << "re,im,ideal_re,ideal_im,user,symbol_idx\n";
        for (const auto& p : d.points)
            os << fmt::format("{},{},{},{},{},{}\n", num(p.received.real()), num(p.received.imag()),
                              num(p.ideal.real()), num(p.ideal.imag()), p.user, p.symbol);
        if (d.frame)
            write_sample_dump(*d.frame, dir / "samples",
                              fmt::format("tx_M{}_{}_snr{}_drop{}", d.antennas, to_string(d.method),
                                          num(d.snr_db), d.drop));
    }
    auto os = open_out(dir / "evm_summary.json");
    os << j.dump(2) << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return fmt::format("{:016x}", h);
}

RunManifest make_manifest(const std::string& command, const std::string& config_text,
                          const Scenario& scenario) {
    RunManifest m;
    m.command = command;
    m.config_hash = fnv1a_hex(config_text);
    m.tool_version = kToolVersion;
    m.master_seed = scenario.master_seed;
    for (std::size_t i = 0; i < scenario.drops; ++i)
        m.drop_seeds.push_back(split_seed(scenario.master_seed, i));
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    m.timestamp = buf;
    return m;
}

void write_manifest(const RunManifest& manifest, const Scenario& scenario,
                    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["scenario"] = scenario.id;
    j["config_fnv1a64"] = manifest.config_hash;
    j["tool_version"] = manifest.tool_version;
    j["master_seed"] = manifest.master_seed;
    j["seed_scheme"] = "drop i uses mix64(master + (i+1)*0x9E3779B97F4A7C15) (SplitMix64)";
    j["drop_seeds"] = manifest.drop_seeds;
    j["snr_convention"] =
        "in-band SNR: unit total transmit power over the occupied band, unit average channel "
        "gain per antenna; each demodulated subcarrier sees noise variance 1/snr";
    j["sample_rate_hz"] = scenario.numerologies.sample_rate();
    j["timestamp"] = manifest.timestamp;
    auto os = open_out(dir / "manifest.json");
    os << j.dump(2) << '\n';
}

} // namespace mnmimo
