// jumpsim: simulate / verify spatial birth-death models and solve
// their count-process reductions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "jumpsim/analysis.hpp"
#include "jumpsim/ensemble.hpp"
#include "jumpsim/model_spec.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using namespace jumpsim;

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

std::string manifest_json(const RunConfig& cfg, std::uint64_t model_hash) {
    nlohmann::json j;
    j["tool"] = "jumpsim";
    j["version"] = kVersion;
    j["command"] = command_name(cfg.command);
    j["seed"] = cfg.seed;
    j["config_hash"] = hex64(cfg.config_hash);
    j["model_hash"] = hex64(model_hash);
    j["timestamp"] = static_cast<long long>(std::time(nullptr));
    return j.dump();
}

std::string manifest_comment(const RunConfig& cfg, std::uint64_t model_hash) {
    return "# " + manifest_json(cfg, model_hash);
}

// temp file + rename so readers never observe a partial file.
void write_atomic(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

nlohmann::json config_to_json(const Configuration& eta) {
    return nlohmann::json::parse(eta.to_json());
}

int cmd_simulate(const RunConfig& cfg, const ModelSpec& model) {
    std::ostringstream out;
    out << (cfg.format == OutFormat::csv
                ? manifest_comment(cfg, model.hash)
                : manifest_json(cfg, model.hash))
        << "\n";
    SimOptions opts;
    opts.horizon = cfg.t - cfg.s;
    if (cfg.format == OutFormat::csv)
        out << "replicate,event,t,count,terminated\n";
    if (model.spatial) {
        auto trajs = run_replicates<Trajectory<Configuration>>(
            cfg.replicates, cfg.seed, cfg.workers, [&](std::size_t i, Rng& rng) {
                Rng init = Rng::stream(cfg.seed, (1ULL << 32) + i);
                Configuration eta0 = model.draw_initial(init);
                return simulate_path(*model.spatial->kernel, eta0, cfg.s, opts,
                                     rng);
            });
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            const auto& tr = trajs[i];
            if (cfg.format == OutFormat::jsonl) {
                nlohmann::json head;
                head["replicate"] = i;
                head["start_time"] = tr.start_time;
                head["start_state"] = config_to_json(tr.start_state);
                head["terminated"] = to_string(tr.terminated);
                out << head.dump() << "\n";
                for (const auto& [t, state] : tr.events) {
                    nlohmann::json ev;
                    ev["t"] = t;
                    ev["state"] = config_to_json(state);
                    out << ev.dump() << "\n";
                }
            } else {
                out << i << ",start," << tr.start_time << ","
                    << tr.start_state.size() << "," << to_string(tr.terminated)
                    << "\n";
                for (std::size_t e = 0; e < tr.events.size(); ++e)
                    out << i << "," << e << "," << tr.events[e].first << ","
                        << tr.events[e].second.size() << ",\n";
            }
        }
    } else {
        CountKernel ck(*model.finite);
        auto trajs = run_replicates<Trajectory<int>>(
            cfg.replicates, cfg.seed, cfg.workers,
            [&](std::size_t, Rng& rng) {
                return simulate_path(ck, model.init_state, cfg.s, opts, rng);
            });
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            const auto& tr = trajs[i];
            if (cfg.format == OutFormat::jsonl) {
                nlohmann::json head;
                head["replicate"] = i;
                head["start_time"] = tr.start_time;
                head["start_state"] = tr.start_state;
                head["terminated"] = to_string(tr.terminated);
                out << head.dump() << "\n";
                for (const auto& [t, state] : tr.events)
                    out << nlohmann::json{{"t", t}, {"state", state}}.dump()
                        << "\n";
            } else {
                out << i << ",start," << tr.start_time << "," << tr.start_state
                    << "," << to_string(tr.terminated) << "\n";
                for (std::size_t e = 0; e < tr.events.size(); ++e)
                    out << i << "," << e << "," << tr.events[e].first << ","
                        << tr.events[e].second << ",\n";
            }
        }
    }
    write_atomic(cfg.out_path, out.str());
    return 0;
}

int cmd_moments(const RunConfig& cfg, const ModelSpec& model) {
    if (!model.spatial)
        throw ValidationError("moments needs a spatial model");
    int G = cfg.time_points;
    SimOptions opts;
    opts.horizon = cfg.t - cfg.s;
    // One path per replicate; counts read off at every grid time.
    auto per_rep = run_replicates<std::vector<double>>(
        cfg.replicates, cfg.seed, cfg.workers, [&](std::size_t i, Rng& rng) {
            Rng init = Rng::stream(cfg.seed, (1ULL << 32) + i);
            Configuration eta0 = model.draw_initial(init);
            auto tr = simulate_path(*model.spatial->kernel, eta0, cfg.s, opts,
                                    rng);
            std::vector<double> counts(G + 1);
            std::size_t ev = 0;
            double n = static_cast<double>(tr.start_state.size());
            for (int g = 0; g <= G; ++g) {
                double tg = cfg.s + (cfg.t - cfg.s) * g / G;
                while (ev < tr.events.size() && tr.events[ev].first <= tg) {
                    n = static_cast<double>(tr.events[ev].second.size());
                    ++ev;
                }
                counts[g] = n;
            }
            return counts;
        });
    std::ostringstream out;
    out << manifest_comment(cfg, model.hash) << "\n";
    out << "t,mean_count,stderr_count,mean_V,stderr_V\n";
    for (int g = 0; g <= G; ++g) {
        std::vector<double> ns, vs;
        ns.reserve(per_rep.size());
        for (const auto& row : per_rep) {
            ns.push_back(row[g]);
            vs.push_back(lyapunov_V_count(row[g]));
        }
        auto sn = summarize(ns, 0);
        auto sv = summarize(vs, 0);
        out << cfg.s + (cfg.t - cfg.s) * g / G << "," << sn.mean << ","
            << sn.stderror << "," << sv.mean << "," << sv.stderror << "\n";
    }
    write_atomic(cfg.out_path, out.str());
    return 0;
}

int cmd_solve(const RunConfig& cfg, const ModelSpec& model) {
    FiniteKernel kernel;
    if (model.finite) {
        kernel = *model.finite;
    } else {
        kernel = meanfield_reduction(*model.spatial, cfg.truncation);
    }
    auto sol = minimal_solution(kernel, cfg.s, cfg.t, cfg.step, cfg.n_terms);
    std::ostringstream out;
    out << manifest_comment(cfg, model.hash) << "\n";
    if (cfg.format == OutFormat::csv) {
        out << matrix_to_csv(sol.transition, kernel.name, cfg.s, cfg.t,
                             cfg.step, sol.info.terms_used);
        out << "# defect per source state\n";
        for (int i = 0; i < kernel.n_states; ++i)
            out << i << "," << sol.defect(i) << "\n";
    } else {
        for (int i = 0; i < kernel.n_states; ++i) {
            nlohmann::json row;
            row["source"] = i;
            std::vector<double> p(kernel.n_states);
            for (int j = 0; j < kernel.n_states; ++j)
                p[j] = sol.transition(i, j);
            row["p"] = p;
            row["defect"] = sol.defect(i);
            out << row.dump() << "\n";
        }
    }
    write_atomic(cfg.out_path, out.str());
    return 0;
}

int cmd_verify(const RunConfig& cfg, const ModelSpec& model) {
    std::vector<VerificationReport> reports;
    auto want = [&](const std::string& k) {
        return std::find(cfg.verify.begin(), cfg.verify.end(), k) !=
               cfg.verify.end();
    };
    if (model.spatial) {
        const SpatialModel& m = *model.spatial;
        auto configs = verification_configs(m.dim, cfg.seed, 100);
        std::vector<double> t_grid;
        for (int g = 0; g <= 20; ++g)
            t_grid.push_back(cfg.s + (cfg.t - cfg.s) * g / 20.0);
        if (want("B"))
            reports.push_back(
                check_condition_B(m, t_grid, configs, cfg.constant_B));
        if (want("D"))
            reports.push_back(
                check_condition_D(m, cfg.t, configs, cfg.constant_D));
        if (want("E"))
            reports.push_back(check_condition_E(m, cfg.t, configs));
        if (want("doob") || want("moments") || want("xcheck")) {
            Rng init = Rng::stream(cfg.seed, 1ULL << 32);
            Configuration eta0 = model.draw_initial(init);
            if (want("doob")) {
                double v0 = lyapunov_V(eta0);
                auto rows = doob_bound_test(m, eta0, cfg.s, cfg.t,
                                            {2 * v0, 4 * v0, 8 * v0},
                                            cfg.replicates, cfg.seed,
                                            cfg.workers);
                VerificationReport rep;
                rep.condition = "doob";
                rep.configs_tested = static_cast<int>(rows.size());
                rep.pass = true;
                double worst = -1.0;
                for (const auto& r : rows) {
                    rep.pass = rep.pass && r.pass;
                    worst = std::max(worst, r.empirical - r.bound);
                }
                rep.worst_violation = worst;
                rep.constant = m.condition_B_constant();
                rep.detail = "thresholds 2,4,8 x V(eta0)";
                reports.push_back(rep);
            }
            if (want("moments")) {
                auto r = moment_bound_test(m, eta0, cfg.s, cfg.t,
                                           cfg.replicates, cfg.seed,
                                           cfg.workers);
                VerificationReport rep;
                rep.condition = "moments";
                rep.pass = r.pass;
                rep.worst_violation =
                    std::max(r.first_empirical - r.first_bound,
                             r.second_empirical - r.second_bound);
                rep.configs_tested = 1;
                rep.detail = "first/second displayed moment bounds";
                reports.push_back(rep);
            }
            if (want("xcheck")) {
                auto r = simulator_vs_solver(m, cfg.s, cfg.t, cfg.truncation,
                                             static_cast<int>(eta0.size()),
                                             cfg.step, cfg.replicates,
                                             cfg.seed, cfg.workers);
                VerificationReport rep;
                rep.condition = "xcheck";
                rep.constant = r.tv_distance;
                rep.worst_violation = r.tv_distance - 0.02;
                rep.configs_tested = 1;
                rep.pass = r.tv_distance <= 0.02;
                rep.detail = "TV(empirical, solver row)";
                reports.push_back(rep);
            }
        }
    } else {
        // Finite kernels only support the cross check.
        auto r = simulator_vs_solver(*model.finite, model.init_state, cfg.s,
                                     cfg.t, cfg.step, cfg.replicates, cfg.seed,
                                     cfg.workers);
        VerificationReport rep;
        rep.condition = "xcheck";
        rep.constant = r.tv_distance;
        rep.worst_violation = r.tv_distance - 0.02;
        rep.configs_tested = 1;
        rep.pass = r.tv_distance <= 0.02;
        rep.detail = "TV(empirical, solver row)";
        reports.push_back(rep);
    }
    std::ostringstream out;
    out << manifest_json(cfg, model.hash) << "\n"
        << reports_to_json(reports) << "\n";
    write_atomic(cfg.out_path, out.str());
    std::cerr << reports_to_table(reports);
    for (const auto& r : reports)
        if (!r.pass) return 1;
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    // Re-parse the model file per sweep point with the swept key
    // overridden; report the terminal mean count.
    SpecFile base = SpecFile::parse_file(cfg.model_path);
    std::ostringstream out;
    out << "# tool=jumpsim version=" << kVersion
        << " command=sweep key=" << cfg.sweep_key << " seed=" << cfg.seed
        << "\n";
    out << cfg.sweep_key << ",mean_count,stderr,capped\n";
    for (int p = 0; p < cfg.sweep_points; ++p) {
        double value = cfg.sweep_from +
                       (cfg.sweep_to - cfg.sweep_from) * p /
                           (cfg.sweep_points - 1);
        std::ifstream in(cfg.model_path);
        std::stringstream ss;
        ss << in.rdbuf();
        std::ostringstream text;
        text << ss.str() << "\n" << cfg.sweep_key << " = " << value << "\n";
        // Duplicate-key guard in the parser: strip any original line.
        std::istringstream lines(ss.str());
        std::ostringstream cleaned;
        std::string line;
        while (std::getline(lines, line)) {
            auto eq = line.find('=');
            std::string key = eq == std::string::npos
                                  ? ""
                                  : line.substr(0, eq);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            if (key != cfg.sweep_key) cleaned << line << "\n";
        }
        cleaned << cfg.sweep_key << " = " << value << "\n";
        SpecFile spec =
            SpecFile::parse_text(cleaned.str(), cfg.model_path);
        ModelSpec model = model_from_spec(spec);
        if (!model.spatial)
            throw ValidationError("sweep needs a spatial model");
        Rng init = Rng::stream(cfg.seed, 1ULL << 32);
        Configuration eta0 = model.draw_initial(init);
        auto stats = ensemble_expectation<Configuration>(
            *model.spatial->kernel, eta0, cfg.s, cfg.t,
            [](const Configuration& eta) {
                return static_cast<double>(eta.size());
            },
            cfg.replicates, cfg.seed, {}, cfg.workers);
        out << value << "," << stats.mean << "," << stats.stderror << ","
            << stats.capped << "\n";
    }
    write_atomic(cfg.out_path, out.str());
    return 0;
}

int cmd_cluster_stats(const RunConfig& cfg) {
    Rng rng = Rng::stream(cfg.seed, 7);
    std::vector<long long> hist(kGdlClusterCut + 1, 0);
    double sum = 0.0, sum2 = 0.0;
    for (long long i = 0; i < cfg.draws; ++i) {
        int k = sample_cluster_size(rng);
        ++hist[k];
        sum += k;
        sum2 += static_cast<double>(k) * k;
    }
    double n = static_cast<double>(cfg.draws);
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    std::ostringstream out;
    out << "# tool=jumpsim version=" << kVersion
        << " command=cluster-stats seed=" << cfg.seed << " draws=" << cfg.draws
        << "\n";
    out << "k,observed,expected\n";
    for (int k = 1; k <= kGdlClusterCut; ++k) {
        double expected = n * gdl_cluster_pmf(k);
        if (hist[k] == 0 && expected < 0.5) continue;
        out << k << "," << hist[k] << "," << expected << "\n";
    }
    out << "# mean=" << mean << " var=" << var
        << " exact_mean=" << std::exp(1.0) / (std::exp(1.0) - 1.0) << "\n";
    write_atomic(cfg.out_path, out.str());
    return 0;
}

int dispatch(RunConfig cfg) {
    switch (cfg.command) {
        case Command::sweep:
            return cmd_sweep(cfg);
        case Command::cluster_stats:
            return cmd_cluster_stats(cfg);
        default:
            break;
    }
    ModelSpec model = load_model(cfg.model_path);
    switch (cfg.command) {
        case Command::simulate:
            return cmd_simulate(cfg, model);
        case Command::moments:
            return cmd_moments(cfg, model);
        case Command::solve:
            return cmd_solve(cfg, model);
        case Command::verify:
            return cmd_verify(cfg, model);
        default:
            return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jumpsim: birth-death particle system toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_path;
    std::optional<std::string> format;
    std::optional<int> workers;

    std::map<std::string, Command> names = {
        {"simulate", Command::simulate}, {"moments", Command::moments},
        {"solve", Command::solve},       {"verify", Command::verify},
        {"sweep", Command::sweep},       {"cluster-stats", Command::cluster_stats},
    };
    for (auto& [name, cmd] : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run config file")
            ->required();
        sub->add_option("--seed", seed, "master seed (overrides config)");
        sub->add_option("--out", out_path, "output path (overrides config)");
        sub->add_option("--format", format, "csv|jsonl (overrides config)")
            ->check(CLI::IsMember({"csv", "jsonl"}));
        sub->add_option("--workers", workers, "worker pool size");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = parse_config(config_path);
        cfg.command = names.at(app.get_subcommands()[0]->get_name());
        if (seed) cfg.seed = *seed;
        if (out_path) cfg.out_path = *out_path;
        if (format)
            cfg.format = *format == "csv" ? OutFormat::csv : OutFormat::jsonl;
        if (workers) cfg.workers = *workers;
        return dispatch(std::move(cfg));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
