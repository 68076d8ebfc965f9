#pragma once

#include "racsim/types.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace racsim {

/// Uncertain strict-feedback chain
///
///   dx_i = f_i(x,t) + g_i(x,t) * x_{i+1} + d_i(x,t) + gamma_i(t)
///   dx_n = f_n(x,t) + g_n(x,t) * u       + d_n(x,t) + gamma_n(t)
///
/// f_i is the known modeling term, g_i the functional gain, d_i unmodeled
/// dynamics (may depend on the full state, i.e. non-triangular) and gamma_i a
/// time-varying disturbance. Empty slots evaluate to zero (g defaults to one).
struct UncertainSfModel {
    using StateFn = std::function<double(const Vec& x, double t)>;
    using TimeFn = std::function<double(double t)>;

    int order = 0;
    std::vector<StateFn> f;
    std::vector<StateFn> g;
    std::vector<StateFn> d;
    std::vector<TimeFn> gamma;

    void validate() const {
        if (order < 2) {
            throw ConfigError("model.order", "strict-feedback chain needs order >= 2");
        }
        auto check_size = [this](std::size_t n, const char* name) {
            if (n != 0 && n != static_cast<std::size_t>(order)) {
                throw ConfigError(std::string("model.") + name,
                                  "evaluator list must be empty or match the order");
            }
        };
        check_size(f.size(), "f");
        check_size(g.size(), "g");
        check_size(d.size(), "d");
        check_size(gamma.size(), "gamma");
    }

    Vec derivative(const Vec& x, double u, double t) const {
        Vec dx(order);
        for (int i = 0; i < order; ++i) {
            const double fi = (i < static_cast<int>(f.size()) && f[i]) ? f[i](x, t) : 0.0;
            const double gi = (i < static_cast<int>(g.size()) && g[i]) ? g[i](x, t) : 1.0;
            const double di = (i < static_cast<int>(d.size()) && d[i]) ? d[i](x, t) : 0.0;
            const double gm = (i < static_cast<int>(gamma.size()) && gamma[i]) ? gamma[i](t) : 0.0;
            const double drive = (i + 1 < order) ? x[i + 1] : u;
            dx[i] = fi + gi * drive + di + gm;
            if (!std::isfinite(dx[i])) {
                throw NumericError("non-finite derivative", i + 1, t);
            }
        }
        return dx;
    }
};

/// One classic fourth-order Runge-Kutta step of an arbitrary rhs, input held
/// constant over the step.
template <class Rhs>
Vec rk4_step(Rhs&& rhs, const Vec& x, double t, double h) {
    const Vec k1 = rhs(x, t);
    const Vec k2 = rhs(Vec(x + 0.5 * h * k1), t + 0.5 * h);
    const Vec k3 = rhs(Vec(x + 0.5 * h * k2), t + 0.5 * h);
    const Vec k4 = rhs(Vec(x + h * k3), t + h);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Advances the strict-feedback chain by one step. Throws NumericError with
/// the offending subsystem index if any stage derivative is non-finite.
inline Vec step(const UncertainSfModel& model, const Vec& x, double u, double t, double h) {
    if (!(h > 0.0)) {
        throw ConfigError("step_s", "integration step must be positive");
    }
    for (int i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw NumericError("non-finite state entering integration", i + 1, t);
        }
    }
    return rk4_step([&](const Vec& xs, double ts) { return model.derivative(xs, u, ts); }, x, t, h);
}

}  // namespace racsim
