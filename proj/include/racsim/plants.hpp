#pragma once

#include "racsim/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace racsim::plants {

/// PMSM-driven electromechanical linear actuator. Electrical side in the
/// rotating d-q frame, mechanical side reduced to the load carriage through
/// gearbox and ball screw. Defaults are the catalog values of the modeled
/// drive; note the nameplate rated torque (37 N·m) exceeds
/// torque_constant() * rated current (~18.6 N·m) — both numbers are retained
/// as configured rather than reconciled.
struct EmlaParams {
    double pm_flux_wb = 0.134;
    double pole_pairs = 4.0;
    double phase_resistance_ohm = 0.08;
    double phase_inductance_h = 2.42e-3;
    double gear_ratio = 7.7;
    double screw_lead_m = 0.016;
    double rated_torque_nm = 37.0;
    double peak_torque_nm = 77.0;
    double rated_speed_rpm = 3000.0;
    double rated_current_a = 23.1;
    double peak_current_a = 48.2;
    double load_mass_kg = 500.0;
    double viscous_friction_ns_per_m = 2000.0;
    double screw_efficiency = 0.9;

    void validate() const;

    /// N·m per ampere of q-axis current: 1.5 * p * psi.
    double torque_constant() const { return 1.5 * pole_pairs * pm_flux_wb; }

    /// Load-side newtons per N·m of motor torque through gear and screw.
    double force_per_torque() const {
        return 2.0 * M_PI * gear_ratio * screw_efficiency / screw_lead_m;
    }

    /// Motor rad/s per m/s of carriage velocity.
    double motor_speed_per_linear() const { return 2.0 * M_PI * gear_ratio / screw_lead_m; }
};

/// state = [x, v, i_q, i_d], input = [v_q, v_d], load force in N.
Eigen::Vector4d emla_derivatives(const Eigen::Vector4d& state, const Eigen::Vector2d& input,
                                 const EmlaParams& params, double load_force_n, double t);

/// Hydraulic in-wheel drive: valve pressure state -> hydraulic torque ->
/// wheel rotation, gear reduction between motor and wheel. Lag constants and
/// the command-to-torque gain are rig parameters exposed in configuration.
struct HydraulicIwdParams {
    double gear_ratio = 17.7;
    double wheel_diameter_m = 0.854;
    double valve_time_constant_s = 0.02;
    double torque_time_constant_s = 0.05;
    double torque_gain_nm = 400.0;   // motor-side N·m at unit valve command
    double wheel_inertia_kgm2 = 300.0;
    double wheel_viscous_nms = 40.0;

    void validate() const;
};

/// state = [omega, tau_h, p_v]; valve_cmd is the normalized spool command and
/// disturbance_torque_nm acts resistively on the wheel.
Eigen::Vector3d hydraulic_iwd_derivatives(const Eigen::Vector3d& state, double valve_cmd,
                                          const HydraulicIwdParams& params,
                                          double disturbance_torque_nm, double t);

inline double wheel_linear_speed(double omega, const HydraulicIwdParams& params) {
    return omega * 0.5 * params.wheel_diameter_m;
}

/// Planar two-link arm with viscous joint friction; angles measured from the
/// horizontal.
struct TwoLinkArmParams {
    double m1 = 80.0;
    double m2 = 60.0;
    double l1 = 1.2;
    double l2 = 1.0;
    double lc1 = 0.6;
    double lc2 = 0.5;
    double inertia1 = 9.6;   // about each link's center of mass
    double inertia2 = 5.0;
    double gravity = 9.81;
    double joint_viscous_nms = 10.0;

    void validate() const;
};

void manipulator_matrices(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                          const TwoLinkArmParams& params, Eigen::Matrix2d& m_out,
                          Eigen::Matrix2d& c_out, Eigen::Vector2d& g_out);

/// Returns [dq, ddq] with ddq = M(q)^{-1} (tau - C dq - G - b dq).
Eigen::Vector4d manipulator_derivatives(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                                        const Eigen::Vector2d& tau,
                                        const TwoLinkArmParams& params);

double manipulator_energy(const Eigen::Vector2d& q, const Eigen::Vector2d& dq,
                          const TwoLinkArmParams& params);

enum class FaultMode { Healthy, Stuck, Degraded, Excessive };

/// Actuator fault taking effect at onset: output frozen at a fixed torque,
/// scaled down by a factor, or amplified past the command.
struct FaultSpec {
    FaultMode mode = FaultMode::Healthy;
    double onset_s = 0.0;
    double degradation_factor = 1.0;  // (0, 1]
    double stuck_value_nm = 0.0;
    double excess_gain = 1.0;  // > 1

    void validate() const;
};

FaultMode fault_mode_from_string(const std::string& name);

double apply_fault(const FaultSpec& spec, double tau_cmd, double t);

/// Piecewise-linear force schedule, linearly interpolated and clamped at the
/// ends.
struct LoadProfile {
    std::vector<double> time_s;
    std::vector<double> force_n;

    void validate() const;
    double value(double t) const;
};

}  // namespace racsim::plants
