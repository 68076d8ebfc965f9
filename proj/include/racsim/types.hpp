#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace racsim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a configuration file or scenario is malformed. `field` holds
/// the dotted key path that failed validation.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Raised when a rollout produces a non-finite value. Carries the 1-based
/// subsystem index (0 = not subsystem-specific) and the simulation time.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, int subsystem, double t)
        : std::runtime_error(what + " (subsystem " + std::to_string(subsystem) +
                             ", t=" + std::to_string(t) + " s)"),
          subsystem_(subsystem), time_(t) {}

    int subsystem() const { return subsystem_; }
    double time() const { return time_; }

private:
    int subsystem_;
    double time_;
};

}  // namespace racsim
