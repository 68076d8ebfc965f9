#pragma once

#include "racsim/types.hpp"

#include <cmath>

namespace racsim {

/// Actuator command limits, e.g. N·m for a torque interface or V for a
/// voltage interface.
struct SaturationLimits {
    double u_min = -1.0;
    double u_max = 1.0;

    bool valid() const {
        return std::isfinite(u_min) && std::isfinite(u_max) && u_min < u_max;
    }
};

/// Clamps u to the actuator limits. Non-finite u means something upstream
/// already blew up, so it is reported instead of clamped.
inline double saturate(double u, const SaturationLimits& lim) {
    if (!std::isfinite(u)) {
        throw NumericError("non-finite control input", 0, 0.0);
    }
    if (u >= lim.u_max) return lim.u_max;
    if (u <= lim.u_min) return lim.u_min;
    return u;
}

/// Coefficients of the linear saturation model Sat(u) = lambda1*u + lambda2.
/// Inside the limits lambda1 = 1 and lambda2 = 0; outside, lambda1 shrinks as
/// 1/(|u|+1) and lambda2 makes up the difference so the identity holds
/// exactly.
struct SaturationCoefficients {
    double lambda1;
    double lambda2;
};

inline SaturationCoefficients saturation_coefficients(double u, const SaturationLimits& lim) {
    if (!std::isfinite(u)) {
        throw NumericError("non-finite control input", 0, 0.0);
    }
    if (u > lim.u_max) {
        const double l1 = 1.0 / (std::abs(u) + 1.0);
        return {l1, lim.u_max - u * l1};
    }
    if (u < lim.u_min) {
        const double l1 = 1.0 / (std::abs(u) + 1.0);
        return {l1, lim.u_min - u * l1};
    }
    return {1.0, 0.0};
}

}  // namespace racsim
