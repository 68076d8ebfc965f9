#include "racsim/reference.hpp"

#include "racsim/types.hpp"

#include <cmath>

namespace racsim {

namespace {

RefPoint quintic_eval(double q0, double qf, double T, double t) {
    if (t <= 0.0) return {q0, 0.0, 0.0};
    if (t >= T) return {qf, 0.0, 0.0};
    const double s = t / T;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double amp = qf - q0;
    RefPoint p;
    p.q = q0 + amp * (10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2);
    p.qd = amp * (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / T;
    p.qdd = amp * (60.0 * s - 180.0 * s2 + 120.0 * s3) / (T * T);
    return p;
}

}  // namespace

Reference quintic_reference(double q0, double qf, double duration_s) {
    if (!(duration_s > 0.0)) {
        throw ConfigError("reference.duration_s", "must be > 0");
    }
    return [=](double t) { return quintic_eval(q0, qf, duration_s, t); };
}

Reference constant_reference(double q) {
    return [=](double) { return RefPoint{q, 0.0, 0.0}; };
}

Reference quintic_cycle(double q0, double qf, double half_period_s) {
    if (!(half_period_s > 0.0)) {
        throw ConfigError("reference.half_period_s", "must be > 0");
    }
    const double period = 2.0 * half_period_s;
    return [=](double t) {
        if (t <= 0.0) return RefPoint{q0, 0.0, 0.0};
        const double phase = std::fmod(t, period);
        if (phase < half_period_s) {
            return quintic_eval(q0, qf, half_period_s, phase);
        }
        return quintic_eval(qf, q0, half_period_s, phase - half_period_s);
    };
}

Reference ramp_hold(double target, double ramp_s) {
    return quintic_reference(0.0, target, ramp_s);
}

}  // namespace racsim
