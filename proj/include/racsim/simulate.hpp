#pragma once

#include "racsim/controller.hpp"
#include "racsim/reference.hpp"
#include "racsim/safety.hpp"
#include "racsim/sf_model.hpp"
#include "racsim/trace.hpp"
#include "racsim/types.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace racsim {

/// One control chain of the closed loop: which state slots form the chain,
/// the actuator limits, the reference source and the policies. References are
/// re-evaluated every step so observer-driven sources stay current.
struct ChainHookup {
    std::vector<int> state_idx;
    SaturationLimits limits;
    Reference reference;
    ChainController* primary = nullptr;
    ChainController* fallback = nullptr;
};

/// Plant derivative under the saturated commands (one per chain).
using DerivFn = std::function<Vec(const Vec& x, const Vec& u_sat, double t)>;

/// Controller-visible state, e.g. with sensor noise or observer estimates
/// substituted. Identity when absent.
using MeasureFn = std::function<Vec(const Vec& x, double t, double h)>;

/// Runs before the controllers each step (observer updates and similar).
using PreStepFn = std::function<void(double t, const Vec& x_meas, double h)>;

/// Supervised task errors as (state slot, error) pairs. When absent the
/// supervisor watches each chain's primary tracking error.
using TaskErrorFn = std::function<std::vector<std::pair<int, double>>(double t, const Vec& x)>;

struct LoopOptions {
    double duration_s = 1.0;
    double step_s = 1e-3;
    PpcEnvelope envelope;
    double switch_fraction = 0.8;
    MeasureFn measure;
    PreStepFn pre_step;
    TaskErrorFn task_errors;
};

/// Fixed-step closed-loop rollout. Per step: supervise on the task error,
/// evaluate the active policy per chain, log, integrate one RK4 step with the
/// command held. A fallback latch takes effect at the next control step; a
/// shutdown zeroes the command, logs the event and ends the trace at that
/// step. Strictly single-threaded and a pure function of its inputs.
Trace run_closed_loop(const DerivFn& deriv, std::vector<ChainHookup>& chains,
                      const LoopOptions& opts, const Vec& x0);

/// Rollout of a generic uncertain strict-feedback chain under one controller
/// and supervisor. The seed is recorded for provenance; the loop itself draws
/// no randomness.
Trace simulate(const UncertainSfModel& model, ChainController& controller,
               const PpcEnvelope& envelope, double switch_fraction, const Reference& reference,
               double duration_s, double step_s, std::uint64_t seed);

}  // namespace racsim
