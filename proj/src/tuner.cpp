#include "racsim/tuner.hpp"

#include "racsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace racsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded_cost(const CostFn& fn, const Vec& gains) {
    double c;
    try {
        c = fn(gains);
    } catch (const NumericError&) {
        return kInf;  // diverged rollout: infeasible gains, not a tuner failure
    }
    return std::isnan(c) ? kInf : c;
}
}  // namespace

void TunerBox::validate() const {
    if (lo.size() == 0 || lo.size() != hi.size()) {
        throw ConfigError("tune.box", "bounds must be non-empty and match in size");
    }
    for (int j = 0; j < lo.size(); ++j) {
        if (!(lo[j] < hi[j]) || !std::isfinite(lo[j]) || !std::isfinite(hi[j])) {
            throw ConfigError("tune.box", "need finite lo < hi in every coordinate");
        }
    }
}

double TunerBox::clip(int j, double v) const {
    return std::min(hi[j], std::max(lo[j], v));
}

Vec jaya_update(const Vec& x, const Vec& best, const Vec& worst, const TunerBox& box,
                const std::function<double()>& unit_rand) {
    if (x.size() != best.size() || x.size() != worst.size() || x.size() != box.dim()) {
        throw ConfigError("tune", "candidate dimensions do not match");
    }
    Vec out(x.size());
    for (int j = 0; j < x.size(); ++j) {
        const double r1 = unit_rand();
        const double r2 = unit_rand();
        const double a = std::abs(x[j]);
        out[j] = box.clip(j, x[j] + r1 * (best[j] - a) - r2 * (worst[j] - a));
    }
    return out;
}

JayaResult jaya_optimize(const CostFn& cost_fn, const TunerBox& box, const JayaOptions& opts) {
    box.validate();
    if (opts.pop_size < 2) throw ConfigError("tune.pop", "population must be >= 2");
    if (opts.max_iters < 0) throw ConfigError("tune.iters", "iteration budget must be >= 0");

    const int dim = box.dim();
    Rng rng(opts.seed);
    auto draw = [&rng]() { return rng.uniform(); };

    std::vector<Candidate> pop(static_cast<std::size_t>(opts.pop_size));
    for (auto& c : pop) {
        c.gains.resize(dim);
        for (int j = 0; j < dim; ++j) c.gains[j] = rng.uniform(box.lo[j], box.hi[j]);
    }
    par::for_indexed(pop.size(), opts.exec,
                     [&](std::size_t i) { pop[i].cost = guarded_cost(cost_fn, pop[i].gains); });

    auto best_idx = [&pop]() {
        std::size_t b = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].cost < pop[b].cost) b = i;
        }
        return b;
    };
    auto worst_idx = [&pop]() {
        std::size_t w = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].cost > pop[w].cost) w = i;
        }
        return w;
    };

    std::size_t ib = best_idx();
    if (!std::isfinite(pop[ib].cost)) {
        throw ConfigError("tune.box", "infeasible box: every initial candidate failed");
    }

    JayaResult result;
    result.history.reserve(static_cast<std::size_t>(opts.max_iters) + 1);
    result.history.push_back(pop[ib].cost);

    std::vector<Vec> proposals(pop.size());
    std::vector<double> trial_costs(pop.size());

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        const Vec best = pop[best_idx()].gains;
        const Vec worst = pop[worst_idx()].gains;

        // All random draws happen here, in candidate order, so the parallel
        // evaluation below cannot perturb the stream.
        for (std::size_t i = 0; i < pop.size(); ++i) {
            proposals[i] = jaya_update(pop[i].gains, best, worst, box, draw);
        }
        par::for_indexed(pop.size(), opts.exec, [&](std::size_t i) {
            trial_costs[i] = guarded_cost(cost_fn, proposals[i]);
        });
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (trial_costs[i] < pop[i].cost) {
                pop[i].gains = proposals[i];
                pop[i].cost = trial_costs[i];
            }
        }
        result.history.push_back(pop[best_idx()].cost);
    }

    result.best = pop[best_idx()];
    return result;
}

double tracking_cost(const Trace& trace, double weight_position, double weight_velocity) {
    if (trace.rows.empty()) throw ConfigError("tune.cost", "empty trace");
    if (trace.shutdown()) return kInf;

    auto rmse_over = [&trace](const std::vector<int>& idx) {
        if (idx.empty()) return 0.0;
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto& row : trace.rows) {
            for (int i : idx) {
                acc += row.e[i] * row.e[i];
                ++count;
            }
        }
        return std::sqrt(acc / static_cast<double>(count));
    };

    return weight_position * rmse_over(trace.primary_error_idx) +
           weight_velocity * rmse_over(trace.secondary_error_idx);
}

}  // namespace racsim
