#include "racsim/controller.hpp"

#include <algorithm>
#include <cmath>

namespace racsim {

void SubsystemGains::validate(const std::string& where) const {
    auto require = [&](bool ok, const char* name, const char* what) {
        if (!ok) throw ConfigError(where + "." + name, what);
    };
    require(std::isfinite(k) && k > 0.0, "k", "must be finite and > 0");
    require(std::isfinite(gamma) && gamma > 0.0, "gamma", "must be finite and > 0");
    require(std::isfinite(sigma) && sigma >= 0.0, "sigma", "must be finite and >= 0");
    require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon", "must be finite and > 0");
    require(std::isfinite(g_hat), "g_hat", "must be finite");
}

double adapt_bound(double rho_hat, double e, const SubsystemGains& gains, double h) {
    if (!(h > 0.0)) throw ConfigError("step_s", "adaptation interval must be > 0");
    const double drho = gains.gamma * (std::abs(e) - gains.sigma * rho_hat);
    return std::max(0.0, rho_hat + h * drho);
}

RacController::RacController(std::vector<SubsystemGains> gains, SaturationLimits limits)
    : RacController(std::move(gains), std::move(limits), {}) {}

RacController::RacController(std::vector<SubsystemGains> gains, SaturationLimits limits,
                             std::vector<ModelTerm> model_terms)
    : gains_(std::move(gains)), limits_(std::move(limits)), model_terms_(std::move(model_terms)) {
    if (gains_.empty()) {
        throw ConfigError("controller.gains", "at least one subsystem required");
    }
    for (std::size_t i = 0; i < gains_.size(); ++i) {
        gains_[i].validate("controller.subsystem" + std::to_string(i + 1));
    }
    if (!limits_.valid()) {
        throw ConfigError("controller.limits", "need finite u_min < u_max");
    }
    if (!model_terms_.empty() && model_terms_.size() != gains_.size()) {
        throw ConfigError("controller.model_terms", "must be empty or one per subsystem");
    }
    rho_hat_.assign(gains_.size(), 0.0);
    alpha_.assign(gains_.size(), 0.0);
    errors_.assign(gains_.size(), 0.0);
}

void RacController::reset() {
    std::fill(rho_hat_.begin(), rho_hat_.end(), 0.0);
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    std::fill(errors_.begin(), errors_.end(), 0.0);
}

ControlOutput RacController::step(std::span<const double> x_chain, std::span<const double> x_full,
                                  const RefPoint& ref, double t, double h) {
    const int n = order();
    if (static_cast<int>(x_chain.size()) != n) {
        throw ConfigError("controller", "chain state dimension mismatch");
    }

    for (int i = 0; i < n; ++i) {
        const SubsystemGains& g = gains_[i];
        errors_[i] = (i == 0) ? x_chain[0] - ref.q : x_chain[i] - alpha_[i - 1];
        double a = -g.k * errors_[i] - rho_hat_[i] * std::tanh(errors_[i] / g.epsilon);
        if (i > 0) {
            a += connector_term(errors_[i - 1], gains_[i - 1].g_hat);
        }
        if (!model_terms_.empty() && model_terms_[i]) {
            a -= model_terms_[i](x_full, t);
        }
        if (!std::isfinite(a)) {
            throw NumericError("non-finite virtual control", i + 1, t);
        }
        alpha_[i] = a;
    }

    // Adaptation after the control pass; each bound integrates its own error.
    for (int i = 0; i < n; ++i) {
        rho_hat_[i] = adapt_bound(rho_hat_[i], errors_[i], gains_[i], h);
    }

    const double u_presat = alpha_[n - 1];
    return {u_presat, saturate(u_presat, limits_)};
}

}  // namespace racsim
