#pragma once

#include "racsim/parallel.hpp"
#include "racsim/trace.hpp"
#include "racsim/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace racsim {

/// Per-coordinate search bounds for the gain vector.
struct TunerBox {
    Vec lo;
    Vec hi;

    void validate() const;
    int dim() const { return static_cast<int>(lo.size()); }
    double clip(int j, double v) const;
};

/// One member of the tuner population: a gain vector with its evaluated
/// tracking cost (+inf marks a failed rollout).
struct Candidate {
    Vec gains;
    double cost = 0.0;
};

using CostFn = std::function<double(const Vec& gains)>;

/// Parameter-free population update: move toward the best candidate and away
/// from the worst, per coordinate, then clip back into the box.
///
///   x'_j = x_j + r1_j * (best_j - |x_j|) - r2_j * (worst_j - |x_j|)
///
/// unit_rand supplies the U(0,1) draws, two per coordinate in order.
Vec jaya_update(const Vec& x, const Vec& best, const Vec& worst, const TunerBox& box,
                const std::function<double()>& unit_rand);

/// The whole configuration surface: population size, iteration budget, seed.
struct JayaOptions {
    int pop_size = 20;
    int max_iters = 100;
    std::uint64_t seed = 0;
    par::Exec exec = par::default_exec();  // evaluation backend, does not affect results
};

struct JayaResult {
    Candidate best;
    std::vector<double> history;  // best cost after init and after each iteration
};

/// Greedy-acceptance JAYA loop. Candidate evaluations within an iteration are
/// independent and may run on the parallel backend; proposals are drawn
/// serially beforehand so both backends produce identical results. Costs that
/// throw or return NaN count as +inf. Throws if the whole initial population
/// is infeasible.
JayaResult jaya_optimize(const CostFn& cost_fn, const TunerBox& box, const JayaOptions& opts);

/// Weighted tracking cost of a rollout: w_p * RMSE of the primary errors plus
/// w_v * RMSE of the secondary (rate-stage) errors; +inf if the rollout ended
/// in shutdown.
double tracking_cost(const Trace& trace, double weight_position, double weight_velocity);

}  // namespace racsim
