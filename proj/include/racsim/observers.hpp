#pragma once

#include "racsim/types.hpp"

namespace racsim {

/// Estimator state shared by the motion and torque observers. Gains l1, l2
/// place the poles of the 2x2 position/velocity error dynamics; the defaults
/// are a critically damped pair at 25 rad/s.
struct ObserverState {
    double q_hat = 0.0;    // position estimate, plant units
    double v_hat = 0.0;    // velocity estimate
    double tau_hat = 0.0;  // required-torque estimate, N·m
    double l1 = 50.0;
    double l2 = 625.0;

    void validate() const {
        if (!(l1 > 0.0) || !(l2 > 0.0)) {
            throw ConfigError("observer.gains", "l1 and l2 must be > 0");
        }
    }
};

struct TorqueObserverGains {
    double gamma_tau = 100.0;  // adaptation rate, N·m per (rad/s · s)
    double sigma_tau = 0.1;    // leakage, 1/s

    void validate() const {
        if (!(gamma_tau > 0.0)) throw ConfigError("observer.gamma_tau", "must be > 0");
        if (!(sigma_tau > 0.0)) throw ConfigError("observer.sigma_tau", "must be > 0");
    }
};

/// Velocity estimation from noisy position and the applied torque/force.
/// Innovation-driven predictor:
///
///   q' = q_hat + h * (v_hat + l1 * (q_meas - q_hat))
///   v' = v_hat + h * (l2 * (q_meas - q_hat) + tau / inertia_hint)
ObserverState velocity_observer_step(double q_meas, double tau, ObserverState obs,
                                     double inertia_hint, double h);

/// Required-torque estimation from the wheel velocity error, integral action
/// with leakage so the estimate stays bounded:
///
///   tau' = tau_hat + h * (gamma_tau * (omega_ref - omega_meas) - sigma_tau * tau_hat)
///
/// The estimate is meant to feed the hydraulic valve loop as its reference.
ObserverState torque_observer_step(double omega_meas, double omega_ref, ObserverState obs,
                                   const TorqueObserverGains& gains, double h);

}  // namespace racsim
