#pragma once

#include "racsim/reference.hpp"
#include "racsim/saturation.hpp"
#include "racsim/types.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace racsim {

/// Per-subsystem tunables of the robust adaptive cascade.
struct SubsystemGains {
    double k = 1.0;        // feedback gain, > 0
    double gamma = 1.0;    // adaptation rate, > 0
    double sigma = 0.1;    // leakage, >= 0
    double epsilon = 0.1;  // smoothing width of the robust term, > 0
    double g_hat = 1.0;    // assumed functional gain, feeds the next stage's connector

    void validate(const std::string& where) const;
};

/// sigma-modification bound adaptation with projection to rho_hat >= 0:
///
///   rho' = max(0, rho + h * gamma * (|e| - sigma * rho))
///
/// Grows with the error magnitude, leaks back so the estimate stays bounded;
/// fixed point |e|/sigma under constant error.
double adapt_bound(double rho_hat, double e, const SubsystemGains& gains, double h);

/// Stabilizing cross term injected into the next subsystem's control so the
/// g_i*e_i*e_{i+1} product in the summed Lyapunov derivative cancels when
/// g_hat matches the true gain.
inline double connector_term(double e_prev, double g_hat_prev) {
    return -g_hat_prev * e_prev;
}

struct ControlOutput {
    double u_presat;  // last virtual control, before limits
    double u;         // saturated command applied to the plant
};

enum class PolicyTag : unsigned char { Rac, Dnn };

/// Control policy for one strict-feedback chain. Implementations own their
/// internal state; one instance drives exactly one rollout.
class ChainController {
public:
    virtual ~ChainController() = default;

    /// Computes the command from the chain states (innermost first) and the
    /// current reference sample. x_full is the whole measured plant state for
    /// policies whose model terms reach outside the chain. h is the
    /// controller update interval.
    virtual ControlOutput step(std::span<const double> x_chain, std::span<const double> x_full,
                               const RefPoint& ref, double t, double h) = 0;

    virtual void reset() = 0;
    virtual PolicyTag tag() const = 0;

    /// Subsystem tracking errors of the last step, e_1 = x_1 - ref.
    virtual const std::vector<double>& subsystem_errors() const = 0;
};

/// Known modeling term for one subsystem, evaluated on the full measured
/// state so cross-couplings outside the chain stay expressible. The value is
/// in the units of that subsystem's virtual control.
using ModelTerm = std::function<double(std::span<const double> x_full, double t)>;

/// Subsystem-based robust adaptive controller.
///
/// Recursive cascade without analytic differentiation of the virtual
/// controls: the alpha-dot terms are treated as uncertainty and absorbed by
/// the adaptive bound estimates. Model terms are optional; populated slots
/// turn the same cascade into the model-based variant, empty slots reproduce
/// the model-free law bit for bit.
class RacController : public ChainController {
public:
    RacController(std::vector<SubsystemGains> gains, SaturationLimits limits);
    RacController(std::vector<SubsystemGains> gains, SaturationLimits limits,
                  std::vector<ModelTerm> model_terms);

    static RacController model_free(std::vector<SubsystemGains> gains, SaturationLimits limits) {
        return RacController(std::move(gains), std::move(limits));
    }
    static RacController model_based(std::vector<SubsystemGains> gains, SaturationLimits limits,
                                     std::vector<ModelTerm> model_terms) {
        return RacController(std::move(gains), std::move(limits), std::move(model_terms));
    }

    ControlOutput step(std::span<const double> x_chain, std::span<const double> x_full,
                       const RefPoint& ref, double t, double h) override;
    void reset() override;
    PolicyTag tag() const override { return PolicyTag::Rac; }
    const std::vector<double>& subsystem_errors() const override { return errors_; }

    int order() const { return static_cast<int>(gains_.size()); }
    const std::vector<double>& bound_estimates() const { return rho_hat_; }
    const std::vector<double>& virtual_controls() const { return alpha_; }
    const SaturationLimits& limits() const { return limits_; }

private:
    std::vector<SubsystemGains> gains_;
    SaturationLimits limits_;
    std::vector<ModelTerm> model_terms_;  // empty or one per subsystem
    std::vector<double> rho_hat_;
    std::vector<double> alpha_;
    std::vector<double> errors_;
};

}  // namespace racsim
