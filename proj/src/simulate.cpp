#include "racsim/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace racsim {

namespace {

long long grid_steps(double duration_s, double step_s) {
    if (!(step_s > 0.0)) throw ConfigError("step_s", "must be > 0");
    if (!(duration_s > 0.0)) throw ConfigError("duration_s", "must be > 0");
    const long long n = std::llround(duration_s / step_s);
    if (n < 1 || std::abs(static_cast<double>(n) * step_s - duration_s) > 1e-9 * duration_s + 1e-12) {
        throw ConfigError("duration_s", "must be an integer number of steps");
    }
    return n;
}

}  // namespace

Trace run_closed_loop(const DerivFn& deriv, std::vector<ChainHookup>& chains,
                      const LoopOptions& opts, const Vec& x0) {
    opts.envelope.validate();
    if (chains.empty()) throw ConfigError("chains", "at least one control chain required");
    for (const auto& c : chains) {
        if (c.state_idx.empty() || !c.primary || !c.reference) {
            throw ConfigError("chains", "every chain needs states, a reference and a policy");
        }
        for (int idx : c.state_idx) {
            if (idx < 0 || idx >= x0.size()) {
                throw ConfigError("chains", "chain state index out of range");
            }
        }
    }

    const long long n_steps = grid_steps(opts.duration_s, opts.step_s);
    const double h = opts.step_s;
    const int dim = static_cast<int>(x0.size());
    const int n_chains = static_cast<int>(chains.size());

    Trace trace;
    trace.step_s = h;
    trace.state_dim = dim;
    trace.chain_count = n_chains;
    trace.rows.reserve(static_cast<std::size_t>(n_steps));

    trace.primary_error_idx.clear();
    trace.secondary_error_idx.clear();
    if (opts.task_errors) {
        for (const auto& [idx, e] : opts.task_errors(0.0, x0)) trace.primary_error_idx.push_back(idx);
        for (const auto& c : chains) trace.secondary_error_idx.push_back(c.state_idx[0]);
    } else {
        for (const auto& c : chains) {
            trace.primary_error_idx.push_back(c.state_idx[0]);
            if (c.state_idx.size() > 1) trace.secondary_error_idx.push_back(c.state_idx[1]);
        }
    }

    SupervisorState sup;
    sup.switch_fraction = opts.switch_fraction;
    sup.validate();

    const bool has_fallback =
        std::any_of(chains.begin(), chains.end(), [](const ChainHookup& c) { return c.fallback; });

    bool on_fallback = false;
    Vec x = x0;
    std::vector<double> chain_buf;

    auto active_tag = [&chains, &on_fallback]() {
        return (on_fallback && chains[0].fallback) ? chains[0].fallback->tag()
                                                   : chains[0].primary->tag();
    };

    for (long long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * h;
        for (int i = 0; i < dim; ++i) {
            if (!std::isfinite(x[i])) throw NumericError("non-finite state", i + 1, t);
        }
        const Vec x_meas = opts.measure ? opts.measure(x, t, h) : x;
        if (opts.pre_step) opts.pre_step(t, x_meas, h);

        std::vector<RefPoint> refs(chains.size());
        for (std::size_t c = 0; c < chains.size(); ++c) refs[c] = chains[c].reference(t);

        // Supervision watches the true task error, not the measured one.
        double err_sq = 0.0;
        std::vector<std::pair<int, double>> task;
        if (opts.task_errors) {
            task = opts.task_errors(t, x);
            for (const auto& [idx, e] : task) err_sq += e * e;
        } else {
            for (std::size_t c = 0; c < chains.size(); ++c) {
                const double e = x[chains[c].state_idx[0]] - refs[c].q;
                task.emplace_back(chains[c].state_idx[0], e);
                err_sq += e * e;
            }
        }

        const std::size_t events_before = sup.events.size();
        const Decision decision = supervise(std::sqrt(err_sq), t, opts.envelope, sup);
        const bool transition = sup.events.size() > events_before;

        TraceRow row;
        row.t = t;
        row.x = x;
        row.e = Vec::Zero(dim);
        row.envelope = opts.envelope.value(t);
        for (const auto& [idx, e] : task) row.e[idx] = e;

        if (decision == Decision::Shutdown) {
            row.u_raw = Vec::Zero(n_chains);
            row.u_sat = Vec::Zero(n_chains);
            row.policy = active_tag();
            row.event = StepEvent::Shutdown;
            trace.rows.push_back(std::move(row));
            break;
        }

        row.u_raw.resize(n_chains);
        row.u_sat.resize(n_chains);
        for (int c = 0; c < n_chains; ++c) {
            ChainHookup& chain = chains[c];
            ChainController* active =
                (on_fallback && chain.fallback) ? chain.fallback : chain.primary;

            chain_buf.clear();
            for (int idx : chain.state_idx) chain_buf.push_back(x_meas[idx]);
            const ControlOutput out = active->step(
                std::span<const double>(chain_buf.data(), chain_buf.size()),
                std::span<const double>(x_meas.data(), static_cast<std::size_t>(x_meas.size())),
                refs[c], t, h);
            row.u_raw[c] = out.u_presat;
            row.u_sat[c] = out.u;

            const auto& errs = active->subsystem_errors();
            for (std::size_t i = 0; i < chain.state_idx.size() && i < errs.size(); ++i) {
                row.e[chain.state_idx[i]] = errs[i];
            }
        }
        // Restate the task errors last; chain stage-one slots may overlap.
        for (const auto& [idx, e] : task) row.e[idx] = e;

        row.policy = active_tag();
        if (transition && decision == Decision::RunFallback && has_fallback && !on_fallback) {
            row.event = StepEvent::Switch;
        }
        trace.rows.push_back(row);

        // A fresh latch redirects control from the next step on.
        if (decision == Decision::RunFallback && has_fallback) on_fallback = true;

        x = rk4_step([&](const Vec& xs, double ts) { return deriv(xs, row.u_sat, ts); }, x, t, h);
    }

    trace.events = sup.events;
    return trace;
}

Trace simulate(const UncertainSfModel& model, ChainController& controller,
               const PpcEnvelope& envelope, double switch_fraction, const Reference& reference,
               double duration_s, double step_s, std::uint64_t seed) {
    (void)seed;  // the generic loop draws no randomness; kept for call-site provenance
    model.validate();

    std::vector<ChainHookup> chains(1);
    chains[0].state_idx.resize(model.order);
    for (int i = 0; i < model.order; ++i) chains[0].state_idx[i] = i;
    chains[0].limits = controller.tag() == PolicyTag::Rac
                           ? static_cast<RacController&>(controller).limits()
                           : SaturationLimits{-1e12, 1e12};
    chains[0].reference = reference;
    chains[0].primary = &controller;

    LoopOptions opts;
    opts.duration_s = duration_s;
    opts.step_s = step_s;
    opts.envelope = envelope;
    opts.switch_fraction = switch_fraction;

    DerivFn deriv = [&model](const Vec& x, const Vec& u, double t) {
        return model.derivative(x, u[0], t);
    };

    Vec x0 = Vec::Zero(model.order);
    return run_closed_loop(deriv, chains, opts, x0);
}

}  // namespace racsim
