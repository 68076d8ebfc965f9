#pragma once

#include "racsim/types.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace racsim {

/// Time-varying tracking-error bound
///
///   o(t) = (o_shoot - o_bound) * exp(-rate * t) + o_bound
///
/// `overshoot` caps the transient, `steady_bound` is the steady-state limit
/// and `rate` sets how fast the envelope contracts. overshoot == steady_bound
/// gives the constant-bound mode.
struct PpcEnvelope {
    double overshoot = 1.0;     // o_shoot, error units
    double steady_bound = 0.1;  // o_bound, error units
    double rate = 1.0;          // o_star, 1/s

    void validate() const {
        if (!(steady_bound > 0.0) || !std::isfinite(steady_bound)) {
            throw ConfigError("envelope.steady_bound", "must be finite and > 0");
        }
        if (!(overshoot >= steady_bound) || !std::isfinite(overshoot)) {
            throw ConfigError("envelope.overshoot", "must be finite and >= steady_bound");
        }
        if (!(rate > 0.0) || !std::isfinite(rate)) {
            throw ConfigError("envelope.rate", "must be finite and > 0");
        }
    }

    double value(double t) const {
        return (overshoot - steady_bound) * std::exp(-rate * t) + steady_bound;
    }
};

inline double envelope(const PpcEnvelope& env, double t) { return env.value(t); }

/// Logarithmic barrier ln(b^2 / (b^2 - e^2)). Zero at e = 0, grows without
/// bound as |e| approaches the bound. nullopt signals |e| >= bound, where the
/// barrier is undefined and the supervisor must act.
inline std::optional<double> blf_value(double e, double bound) {
    if (std::abs(e) >= bound) return std::nullopt;
    const double b2 = bound * bound;
    return std::log(b2 / (b2 - e * e));
}

enum class Decision { ContinuePrimary, RunFallback, Shutdown };

enum class EventKind { Switch, Shutdown };

struct SupervisorEvent {
    double t;
    EventKind kind;
};

/// Latched two-layer supervision state. Both flags are monotone within a
/// rollout: the fallback latch never releases and shutdown is terminal.
struct SupervisorState {
    double switch_fraction = 0.8;  // fraction of the envelope that trips the fallback
    bool latched = false;
    bool shutdown = false;
    std::vector<SupervisorEvent> events;

    void validate() const {
        if (!(switch_fraction > 0.0 && switch_fraction < 1.0)) {
            throw ConfigError("supervisor.switch_fraction", "must lie in (0, 1)");
        }
    }
};

/// One supervision step on the primary tracking error. Shutdown when the
/// envelope is violated; otherwise latch the fallback once the error passes
/// switch_fraction of the envelope. Events are recorded on transitions only.
inline Decision supervise(double e, double t, const PpcEnvelope& env, SupervisorState& sup) {
    if (sup.shutdown) return Decision::Shutdown;
    const double bound = env.value(t);
    if (std::abs(e) >= bound) {
        sup.shutdown = true;
        sup.events.push_back({t, EventKind::Shutdown});
        return Decision::Shutdown;
    }
    if (sup.latched) return Decision::RunFallback;
    if (std::abs(e) >= sup.switch_fraction * bound) {
        sup.latched = true;
        sup.events.push_back({t, EventKind::Switch});
        return Decision::RunFallback;
    }
    return Decision::ContinuePrimary;
}

}  // namespace racsim
