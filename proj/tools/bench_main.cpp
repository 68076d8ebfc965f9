#include "racsim/parallel.hpp"
#include "racsim/policy.hpp"
#include "racsim/rng.hpp"
#include "racsim/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

using namespace racsim;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    // one warmup, then best-of-reps
    fn();
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

Scenario bench_scenario() {
    std::istringstream cfg(R"(
name = bench
plant = benchmark2
duration_s = 4.0
step_s = 0.001
controller.variant = model_free
controller.k = 2 6
controller.gamma = 0.5 0.5
controller.sigma = 0.5 0.5
controller.epsilon = 0.05 0.05
controller.u_min = -50
controller.u_max = 50
envelope.overshoot = 50
envelope.steady_bound = 10
envelope.rate_per_s = 1.0
initial_state = 1 0
tune.controller.k = 0.5 20
tune.controller.gamma = 0.01 5
)");
    return Scenario::from_config(Config::parse(cfg, "bench"), ".");
}

void report(const char* name, double serial_ms, double omp_ms, bool identical) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx   %s\n", name, serial_ms, omp_ms,
                serial_ms / omp_ms, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", par::thread_count());
    std::printf("%-28s %13s %13s %9s   %s\n", "kernel", "serial", "openmp", "speedup", "outputs");

    {
        const Scenario sc = bench_scenario();
        const TuneJob job = TuneJob::from_scenario(sc);
        CostFn cost = [&sc, &job](const Vec& gains) {
            Scenario trial = sc;
            trial.apply_overlay(job.gains_to_config(gains));
            return tracking_cost(run_scenario(trial).trace, 1.0, 0.0);
        };
        JayaOptions opts;
        opts.pop_size = 16;
        opts.max_iters = 10;
        opts.seed = 7;

        JayaResult serial_res, omp_res;
        opts.exec = par::Exec::Serial;
        const double t_serial = time_ms([&] { serial_res = jaya_optimize(cost, job.box, opts); }, 3);
        opts.exec = par::Exec::OpenMP;
        const double t_omp = time_ms([&] { omp_res = jaya_optimize(cost, job.box, opts); }, 3);

        const bool same = serial_res.best.cost == omp_res.best.cost &&
                          serial_res.best.gains == omp_res.best.gains &&
                          serial_res.history == omp_res.history;
        report("jaya population eval", t_serial, t_omp, same);
    }

    {
        PolicyNet net = PolicyNet::make({4, 16, 16, 1});
        net.randomize(3);
        Dataset data;
        const int n = 20000;
        data.inputs.resize(n, 4);
        data.targets.resize(n);
        Rng rng(11);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) data.inputs(i, j) = rng.uniform(-1.0, 1.0);
            data.targets[i] = rng.uniform(-1.0, 1.0);
        }
        net.feature_offset = Vec::Zero(4);
        net.feature_scale = Vec::Ones(4);

        Mat j_serial, j_omp;
        const double t_serial =
            time_ms([&] { j_serial = policy_jacobian(net, data, par::Exec::Serial); }, 3);
        const double t_omp =
            time_ms([&] { j_omp = policy_jacobian(net, data, par::Exec::OpenMP); }, 3);
        report("lm residual jacobian", t_serial, t_omp, j_serial == j_omp);
    }

    {
        std::vector<Scenario> scenarios;
        for (int i = 0; i < 4; ++i) {
            Scenario sc = bench_scenario();
            sc.name = "bench" + std::to_string(i);
            scenarios.push_back(std::move(sc));
        }
        const std::vector<ControllerVariant> variants = {ControllerVariant::ModelFree,
                                                         ControllerVariant::ModelBased};
        std::vector<CompareCell> a, b;
        const double t_serial = time_ms([&] { a = compare(scenarios, variants, par::Exec::Serial); }, 3);
        const double t_omp = time_ms([&] { b = compare(scenarios, variants, par::Exec::OpenMP); }, 3);
        bool same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) {
            same = a[i].ok == b[i].ok &&
                   a[i].metrics.position_rmse == b[i].metrics.position_rmse &&
                   a[i].metrics.velocity_rmse == b[i].metrics.velocity_rmse;
        }
        report("compare table fan-out", t_serial, t_omp, same);
    }

    return 0;
}
