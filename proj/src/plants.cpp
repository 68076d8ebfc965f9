#include "racsim/plants.hpp"

#include <algorithm>
#include <cmath>

namespace racsim::plants {

void EmlaParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string("plant.emla.") + name, "must be finite and > 0");
        }
    };
    positive(pm_flux_wb, "pm_flux_wb");
    positive(pole_pairs, "pole_pairs");
    positive(phase_resistance_ohm, "phase_resistance_ohm");
    positive(phase_inductance_h, "phase_inductance_h");
    positive(gear_ratio, "gear_ratio");
    positive(screw_lead_m, "screw_lead_m");
    positive(rated_torque_nm, "rated_torque_nm");
    positive(peak_torque_nm, "peak_torque_nm");
    positive(rated_speed_rpm, "rated_speed_rpm");
    positive(load_mass_kg, "load_mass_kg");
    positive(screw_efficiency, "screw_efficiency");
    if (!(viscous_friction_ns_per_m >= 0.0)) {
        throw ConfigError("plant.emla.viscous_friction_ns_per_m", "must be >= 0");
    }
    if (!(peak_torque_nm > rated_torque_nm)) {
        throw ConfigError("plant.emla.peak_torque_nm", "must exceed rated_torque_nm");
    }
}

Eigen::Vector4d emla_derivatives(const Eigen::Vector4d& state, const Eigen::Vector2d& input,
                                 const EmlaParams& p, double load_force_n, double t) {
    (void)t;
    const double v = state[1];
    const double i_q = state[2];
    const double i_d = state[3];
    const double v_q = input[0];
    const double v_d = input[1];

    const double omega_m = v * p.motor_speed_per_linear();
    const double omega_e = p.pole_pairs * omega_m;
    const double R = p.phase_resistance_ohm;
    const double L = p.phase_inductance_h;

    const double torque = p.torque_constant() * i_q;
    const double force = torque * p.force_per_torque();

    Eigen::Vector4d dx;
    dx[0] = v;
    dx[1] = (force - load_force_n - p.viscous_friction_ns_per_m * v) / p.load_mass_kg;
    dx[2] = (v_q - R * i_q - omega_e * L * i_d - omega_e * p.pm_flux_wb) / L;
    dx[3] = (v_d - R * i_d + omega_e * L * i_q) / L;
    return dx;
}

void HydraulicIwdParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string("plant.iwd.") + name, "must be finite and > 0");
        }
    };
    positive(gear_ratio, "gear_ratio");
    positive(wheel_diameter_m, "wheel_diameter_m");
    positive(valve_time_constant_s, "valve_time_constant_s");
    positive(torque_time_constant_s, "torque_time_constant_s");
    positive(torque_gain_nm, "torque_gain_nm");
    positive(wheel_inertia_kgm2, "wheel_inertia_kgm2");
    positive(wheel_viscous_nms, "wheel_viscous_nms");
}

Eigen::Vector3d hydraulic_iwd_derivatives(const Eigen::Vector3d& state, double valve_cmd,
                                          const HydraulicIwdParams& p,
                                          double disturbance_torque_nm, double t) {
    (void)t;
    const double omega = state[0];
    const double tau_h = state[1];
    const double p_v = state[2];

    Eigen::Vector3d dx;
    dx[0] = (p.gear_ratio * tau_h - p.wheel_viscous_nms * omega - disturbance_torque_nm) /
            p.wheel_inertia_kgm2;
    dx[1] = (p.torque_gain_nm * p_v - tau_h) / p.torque_time_constant_s;
    dx[2] = (valve_cmd - p_v) / p.valve_time_constant_s;
    return dx;
}

void TwoLinkArmParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string("plant.arm.") + name, "must be finite and > 0");
        }
    };
    positive(m1, "m1");
    positive(m2, "m2");
    positive(l1, "l1");
    positive(l2, "l2");
    positive(lc1, "lc1");
    positive(lc2, "lc2");
    positive(inertia1, "inertia1");
    positive(inertia2, "inertia2");
    if (!(gravity >= 0.0) || !(joint_viscous_nms >= 0.0)) {
        throw ConfigError("plant.arm", "gravity and joint friction must be >= 0");
    }
}

void manipulator_matrices(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                          const TwoLinkArmParams& p, Eigen::Matrix2d& m_out,
                          Eigen::Matrix2d& c_out, Eigen::Vector2d& g_out) {
    const double a1 = p.inertia1 + p.inertia2 + p.m1 * p.lc1 * p.lc1 +
                      p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2);
    const double a2 = p.m2 * p.l1 * p.lc2;
    const double a3 = p.inertia2 + p.m2 * p.lc2 * p.lc2;

    const double c2 = std::cos(q[1]);
    const double s2 = std::sin(q[1]);

    m_out << a1 + 2.0 * a2 * c2, a3 + a2 * c2,
             a3 + a2 * c2,       a3;

    c_out << -a2 * s2 * dq[1], -a2 * s2 * (dq[0] + dq[1]),
              a2 * s2 * dq[0],  0.0;

    const double g = p.gravity;
    g_out << (p.m1 * p.lc1 + p.m2 * p.l1) * g * std::cos(q[0]) +
                 p.m2 * p.lc2 * g * std::cos(q[0] + q[1]),
             p.m2 * p.lc2 * g * std::cos(q[0] + q[1]);
}

Eigen::Vector4d manipulator_derivatives(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                                        const Eigen::Vector2d& tau,
                                        const TwoLinkArmParams& p) {
    Eigen::Matrix2d m, c;
    Eigen::Vector2d g;
    manipulator_matrices(q, dq, p, m, c, g);

    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(std::abs(det) > 1e-12)) {
        throw NumericError("singular inertia matrix", 1, 0.0);
    }
    const Eigen::Vector2d rhs = tau - c * dq - g - p.joint_viscous_nms * dq;
    Eigen::Matrix2d m_inv;
    m_inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    const Eigen::Vector2d ddq = (m_inv * rhs) / det;

    Eigen::Vector4d out;
    out << dq[0], dq[1], ddq[0], ddq[1];
    return out;
}

double manipulator_energy(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                          const TwoLinkArmParams& p) {
    Eigen::Matrix2d m, c;
    Eigen::Vector2d g;
    manipulator_matrices(q, dq, p, m, c, g);
    const double kinetic = 0.5 * dq.dot(m * dq);
    const double potential = (p.m1 * p.lc1 + p.m2 * p.l1) * p.gravity * std::sin(q[0]) +
                             p.m2 * p.lc2 * p.gravity * std::sin(q[0] + q[1]);
    return kinetic + potential;
}

void FaultSpec::validate() const {
    if (!(onset_s >= 0.0)) throw ConfigError("fault.onset_s", "must be >= 0");
    switch (mode) {
        case FaultMode::Degraded:
            if (!(degradation_factor > 0.0 && degradation_factor <= 1.0)) {
                throw ConfigError("fault.factor", "must lie in (0, 1]");
            }
            break;
        case FaultMode::Excessive:
            if (!(excess_gain > 1.0)) throw ConfigError("fault.gain", "must be > 1");
            break;
        case FaultMode::Stuck:
            if (!std::isfinite(stuck_value_nm)) {
                throw ConfigError("fault.stuck_value_nm", "must be finite");
            }
            break;
        case FaultMode::Healthy:
            break;
    }
}

FaultMode fault_mode_from_string(const std::string& name) {
    if (name == "healthy") return FaultMode::Healthy;
    if (name == "stuck") return FaultMode::Stuck;
    if (name == "degraded") return FaultMode::Degraded;
    if (name == "excessive") return FaultMode::Excessive;
    throw ConfigError("fault.mode", "unknown mode '" + name + "'");
}

double apply_fault(const FaultSpec& spec, double tau_cmd, double t) {
    if (spec.mode == FaultMode::Healthy || t < spec.onset_s) return tau_cmd;
    switch (spec.mode) {
        case FaultMode::Stuck:
            return spec.stuck_value_nm;
        case FaultMode::Degraded:
            return spec.degradation_factor * tau_cmd;
        case FaultMode::Excessive:
            return spec.excess_gain * tau_cmd;
        default:
            return tau_cmd;
    }
}

void LoadProfile::validate() const {
    if (time_s.size() != force_n.size() || time_s.empty()) {
        throw ConfigError("load.profile", "need matching, non-empty time/force lists");
    }
    for (std::size_t i = 1; i < time_s.size(); ++i) {
        if (!(time_s[i] > time_s[i - 1])) {
            throw ConfigError("load.profile", "schedule times must be strictly increasing");
        }
    }
}

double LoadProfile::value(double t) const {
    if (time_s.empty()) return 0.0;
    if (t <= time_s.front()) return force_n.front();
    if (t >= time_s.back()) return force_n.back();
    const auto it = std::upper_bound(time_s.begin(), time_s.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - time_s.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - time_s[lo]) / (time_s[hi] - time_s[lo]);
    return force_n[lo] + w * (force_n[hi] - force_n[lo]);
}

}  // namespace racsim::plants
