#include "racsim/observers.hpp"

#include <cmath>

namespace racsim {

ObserverState velocity_observer_step(double q_meas, double tau, ObserverState obs,
                                     double inertia_hint, double h) {
    if (!(h > 0.0)) throw ConfigError("step_s", "observer interval must be > 0");
    if (!(inertia_hint > 0.0)) throw ConfigError("observer.inertia_hint", "must be > 0");
    obs.validate();

    const double innovation = q_meas - obs.q_hat;
    const double q_next = obs.q_hat + h * (obs.v_hat + obs.l1 * innovation);
    const double v_next = obs.v_hat + h * (obs.l2 * innovation + tau / inertia_hint);
    if (!std::isfinite(q_next) || !std::isfinite(v_next)) {
        throw NumericError("non-finite observer estimate", 0, 0.0);
    }
    obs.q_hat = q_next;
    obs.v_hat = v_next;
    return obs;
}

ObserverState torque_observer_step(double omega_meas, double omega_ref, ObserverState obs,
                                   const TorqueObserverGains& gains, double h) {
    if (!(h > 0.0)) throw ConfigError("step_s", "observer interval must be > 0");
    gains.validate();

    const double err = omega_ref - omega_meas;
    const double tau_next = obs.tau_hat + h * (gains.gamma_tau * err - gains.sigma_tau * obs.tau_hat);
    if (!std::isfinite(tau_next)) {
        throw NumericError("non-finite torque estimate", 0, 0.0);
    }
    obs.tau_hat = tau_next;
    return obs;
}

}  // namespace racsim
