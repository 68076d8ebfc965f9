#pragma once

#include <functional>

namespace racsim {

/// Reference sample with its first two derivatives.
struct RefPoint {
    double q = 0.0;
    double qd = 0.0;
    double qdd = 0.0;
};

using Reference = std::function<RefPoint(double t)>;

/// Fifth-order point-to-point trajectory: q(0) = q0, q(T) = qf, zero velocity
/// and acceleration at both ends. Holds the endpoints outside [0, T].
Reference quintic_reference(double q0, double qf, double duration_s);

Reference constant_reference(double q);

/// Back-and-forth quintic sweeps: q0 -> qf over half_period_s, back over the
/// next half, repeating.
Reference quintic_cycle(double q0, double qf, double half_period_s);

/// Smooth run-up to a constant value, quintic over ramp_s then hold.
Reference ramp_hold(double target, double ramp_s);

}  // namespace racsim
