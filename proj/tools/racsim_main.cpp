#include "racsim/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace racsim;

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out", "cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("out", "cannot open '" + path + "' for writing");
    return out;
}

void print_metrics(const Metrics& m) {
    std::cout << "  position rmse: " << m.position_rmse << '\n'
              << "  velocity rmse: " << m.velocity_rmse << '\n'
              << "  settling:      "
              << (m.settled ? std::to_string(m.settling_time_s) + " s" : "not settled") << '\n'
              << "  peak |u|:      " << m.peak_abs_u << '\n';
    if (m.switched) std::cout << "  policy switch: " << m.switch_time_s << " s\n";
    if (m.shutdown) std::cout << "  shutdown:      " << m.shutdown_time_s << " s\n";
}

int run_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& gains_path, const std::string& policy_path) {
    Scenario sc = Scenario::load(scenario_path);
    if (!gains_path.empty()) sc.apply_overlay(Config::load(gains_path));
    if (!policy_path.empty()) sc.raw.set("policy.file", fs::absolute(policy_path).string());

    const RunResult rr = run_scenario(sc);

    ensure_dir(out_dir);
    rr.trace.write_csv_file(out_dir + "/trace.csv");
    auto mout = open_out(out_dir + "/metrics.csv");
    write_metrics_csv(mout, rr.metrics);

    std::cout << "scenario '" << sc.name << "': " << rr.trace.rows.size() << " steps";
    if (rr.trace.shutdown()) {
        std::cout << ", supervised shutdown at " << rr.trace.shutdown_time() << " s";
    }
    std::cout << '\n';
    print_metrics(rr.metrics);
    std::cout << "wrote " << out_dir << "/trace.csv and metrics.csv\n";
    return 0;
}

int run_tune(const std::string& scenario_path, const std::string& out_dir, int pop, int iters,
             std::uint64_t seed) {
    const Scenario sc = Scenario::load(scenario_path);
    const TuneResult tr = tune_scenario(sc, pop, iters, seed);

    ensure_dir(out_dir);
    tr.gains.save_file(out_dir + "/tuned_gains.cfg");
    auto hist = open_out(out_dir + "/tune_history.csv");
    hist << "iteration,best_cost\n";
    for (std::size_t i = 0; i < tr.jaya.history.size(); ++i) {
        hist << i << ',' << format_double(tr.jaya.history[i]) << '\n';
    }

    std::cout << "tuned " << sc.name << ": best cost " << tr.jaya.best.cost << " after "
              << (tr.jaya.history.size() - 1) << " iterations\n"
              << "wrote " << out_dir << "/tuned_gains.cfg and tune_history.csv\n";
    return 0;
}

int run_train(const std::string& scenario_path, const std::string& out_dir) {
    const Scenario sc = Scenario::load(scenario_path);
    const TrainResult tr = train_policy(sc);

    ensure_dir(out_dir);
    tr.net.save_file(out_dir + "/policy.txt");
    auto hist = open_out(out_dir + "/train_history.csv");
    hist << "accepted_step,sse\n";
    for (std::size_t i = 0; i < tr.lm.sse_history.size(); ++i) {
        hist << i << ',' << format_double(tr.lm.sse_history[i]) << '\n';
    }

    std::cout << "trained policy on " << tr.data.rows() << " samples: sse "
              << tr.lm.sse_history.front() << " -> " << tr.lm.final_sse << " in " << tr.lm.accepted
              << " accepted steps\n"
              << "wrote " << out_dir << "/policy.txt and train_history.csv\n";
    return 0;
}

int run_compare(const std::string& manifest_path, const std::string& out_dir) {
    const Config manifest = Config::load(manifest_path);
    const std::string base = fs::path(manifest_path).parent_path().string();

    std::vector<Scenario> scenarios;
    {
        std::istringstream ss(manifest.get_string("scenarios"));
        std::string token;
        while (ss >> token) {
            const fs::path p = fs::path(token).is_absolute() ? fs::path(token)
                                                             : fs::path(base) / token;
            scenarios.push_back(Scenario::load(p.string()));
        }
    }
    std::vector<ControllerVariant> variants;
    {
        std::istringstream ss(manifest.get_string("controllers"));
        std::string token;
        while (ss >> token) variants.push_back(variant_from_string(token));
    }

    const auto cells = compare(scenarios, variants);

    ensure_dir(out_dir);
    auto out = open_out(out_dir + "/compare.csv");
    write_compare_csv(out, cells);

    int failures = 0;
    for (const auto& cell : cells) {
        std::cout << cell.scenario << " / " << cell.controller << ": ";
        if (cell.ok) {
            std::cout << "position rmse " << cell.metrics.position_rmse;
            if (cell.metrics.shutdown) {
                std::cout << " (shutdown at " << cell.metrics.shutdown_time_s << " s)";
            }
            std::cout << '\n';
        } else {
            std::cout << "error: " << cell.error << '\n';
            ++failures;
        }
    }
    std::cout << "wrote " << out_dir << "/compare.csv\n";
    return failures == static_cast<int>(cells.size()) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strict-feedback robust adaptive control simulation"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", gains_path, policy_path, manifest_path;
    int pop = 20, iters = 100;
    std::uint64_t seed = 0;

    auto* sim = app.add_subcommand("simulate", "Run one scenario and write trace + metrics");
    sim->add_option("scenario", scenario_path, "scenario config file")->required();
    sim->add_option("--out", out_dir, "output directory");
    sim->add_option("--gains", gains_path, "gain block overlay (tuned_gains.cfg)");
    sim->add_option("--policy", policy_path, "policy weights file override");

    auto* tune = app.add_subcommand("tune", "Optimize the scenario's tunable gains");
    tune->add_option("scenario", scenario_path, "scenario config file")->required();
    tune->add_option("--out", out_dir, "output directory");
    tune->add_option("--pop", pop, "population size");
    tune->add_option("--iters", iters, "iteration budget");
    tune->add_option("--seed", seed, "optimizer seed");

    auto* train = app.add_subcommand("train", "Collect ramp data and train the policy net");
    train->add_option("scenario", scenario_path, "scenario config file")->required();
    train->add_option("--out", out_dir, "output directory");

    auto* cmp = app.add_subcommand("compare", "Run a scenario x controller table");
    cmp->add_option("manifest", manifest_path, "comparison manifest file")->required();
    cmp->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(scenario_path, out_dir, gains_path, policy_path);
        if (tune->parsed()) return run_tune(scenario_path, out_dir, pop, iters, seed);
        if (train->parsed()) return run_train(scenario_path, out_dir);
        if (cmp->parsed()) return run_compare(manifest_path, out_dir);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
