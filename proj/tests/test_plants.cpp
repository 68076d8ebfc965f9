#include "racsim/plants.hpp"
#include "racsim/sf_model.hpp"

#include <doctest.h>

#include <cmath>

using namespace racsim;
using namespace racsim::plants;

TEST_CASE("emla: all-zero state is an equilibrium") {
    const EmlaParams p;
    const auto dx = emla_derivatives(Eigen::Vector4d::Zero(), Eigen::Vector2d::Zero(), p, 0.0, 0.0);
    CHECK(dx.norm() == 0.0);
}

TEST_CASE("emla: torque constant against the hand-evaluated rated point") {
    const EmlaParams p;
    // 1.5 * 4 * 0.134 * 23.1 = 18.5724 N·m at rated current; the nameplate
    // rated torque is larger, both values are carried as configured.
    CHECK(p.torque_constant() * p.rated_current_a == doctest::Approx(18.5724).epsilon(1e-12));
    CHECK(p.rated_torque_nm == 37.0);
    CHECK(p.peak_torque_nm > p.rated_torque_nm);
}

TEST_CASE("emla: q-current holds steady when the voltage matches drop plus back-emf") {
    const EmlaParams p;
    Eigen::Vector4d state;
    state << 0.1, 0.05, 12.0, -0.4;  // moving carriage, nonzero currents
    const double omega_e = p.pole_pairs * state[1] * p.motor_speed_per_linear();
    const double v_q = p.phase_resistance_ohm * state[2] +
                       omega_e * (p.phase_inductance_h * state[3] + p.pm_flux_wb);
    const auto dx = emla_derivatives(state, {v_q, 0.0}, p, 0.0, 0.0);
    CHECK(std::abs(dx[2]) < 1e-9);  // roundoff of ~1e4-scale terms over L
}

TEST_CASE("emla: electrical subsystem is linear once coupling is frozen") {
    const EmlaParams p;
    // hold the carriage still; roll only the electrical pair under v_q
    auto electrical_rollout = [&](double v_q_amp) {
        Vec iq(2);  // [i_q, i_d]
        iq.setZero();
        auto rhs = [&](const Vec& x, double t) {
            Eigen::Vector4d state;
            state << 0.0, 0.0, x[0], x[1];
            const double v_q = v_q_amp * std::sin(10.0 * t);
            const auto dx = emla_derivatives(state, {v_q, 0.0}, p, 0.0, t);
            Vec out(2);
            out << dx[2], dx[3];
            return out;
        };
        const double h = 1e-4;
        for (int k = 0; k < 5000; ++k) iq = rk4_step(rhs, iq, k * h, h);
        return iq[0];
    };
    const double a = electrical_rollout(3.0);
    const double b = electrical_rollout(5.0);
    const double ab = electrical_rollout(8.0);
    CHECK(std::abs(ab - (a + b)) < 1e-9);
}

TEST_CASE("hydraulic iwd: zero state, dc gain and wheel speed") {
    const HydraulicIwdParams p;
    CHECK(hydraulic_iwd_derivatives(Eigen::Vector3d::Zero(), 0.0, p, 0.0, 0.0).norm() == 0.0);
    CHECK(wheel_linear_speed(1.0, p) == doctest::Approx(0.427).epsilon(1e-12));

    // constant valve command settles at omega = G K c / b
    const double c = 0.01;
    Vec x = Vec::Zero(3);
    auto rhs = [&](const Vec& xs, double t) {
        return Vec(hydraulic_iwd_derivatives(xs, c, p, 0.0, t));
    };
    const double h = 1e-3;
    for (int k = 0; k < 80000; ++k) x = rk4_step(rhs, x, k * h, h);
    const double omega_ss = p.gear_ratio * p.torque_gain_nm * c / p.wheel_viscous_nms;
    CHECK(x[0] == doctest::Approx(omega_ss).epsilon(1e-3));
}

TEST_CASE("manipulator: gravity-compensating torque is an equilibrium") {
    const TwoLinkArmParams p;
    const Eigen::Vector2d q(0.4, -0.7);
    const Eigen::Vector2d dq(0.0, 0.0);
    Eigen::Matrix2d m, c;
    Eigen::Vector2d g;
    manipulator_matrices(q, dq, p, m, c, g);
    const auto dx = manipulator_derivatives(q, dq, g, p);
    CHECK(std::abs(dx[2]) < 1e-12);
    CHECK(std::abs(dx[3]) < 1e-12);
}

TEST_CASE("manipulator: coriolis matrix passes the skew-symmetry power check") {
    const TwoLinkArmParams p;
    const Eigen::Vector2d q(0.3, 0.9);
    const Eigen::Vector2d dq(1.2, -0.8);

    Eigen::Matrix2d m, c, m_plus, m_minus, c_unused;
    Eigen::Vector2d g;
    manipulator_matrices(q, dq, p, m, c, g);
    const double delta = 1e-6;
    manipulator_matrices(q + Eigen::Vector2d(0.0, delta), dq, p, m_plus, c_unused, g);
    manipulator_matrices(q - Eigen::Vector2d(0.0, delta), dq, p, m_minus, c_unused, g);
    const Eigen::Matrix2d m_dot = (m_plus - m_minus) / (2.0 * delta) * dq[1];

    const double residual = dq.dot((m_dot - 2.0 * c) * dq);
    CHECK(std::abs(residual) < 1e-6);
}

TEST_CASE("manipulator: kinetic energy is conserved without gravity, friction or torque") {
    TwoLinkArmParams p;
    p.gravity = 0.0;
    p.joint_viscous_nms = 0.0;
    Vec x(4);
    x << 0.2, -0.5, 0.8, 0.6;  // [q1 q2 dq1 dq2]
    const double e0 = manipulator_energy({x[0], x[1]}, {x[2], x[3]}, p);

    auto rhs = [&](const Vec& xs, double) {
        return Vec(manipulator_derivatives({xs[0], xs[1]}, {xs[2], xs[3]},
                                           Eigen::Vector2d::Zero(), p));
    };
    const double h = 1e-3;
    for (int k = 0; k < 10000; ++k) x = rk4_step(rhs, x, k * h, h);
    const double e1 = manipulator_energy({x[0], x[1]}, {x[2], x[3]}, p);
    CHECK(std::abs(e1 - e0) / std::abs(e0) < 1e-6);
}

TEST_CASE("manipulator: energy balance matches applied power minus dissipation") {
    const TwoLinkArmParams p;
    Vec x(4);
    x << 0.1, 0.2, 0.0, 0.0;
    const Eigen::Vector2d tau(25.0, -10.0);

    auto rhs = [&](const Vec& xs, double) {
        return Vec(manipulator_derivatives({xs[0], xs[1]}, {xs[2], xs[3]}, tau, p));
    };
    const double h = 1e-4;
    double work = 0.0;
    double e_prev = manipulator_energy({x[0], x[1]}, {x[2], x[3]}, p);
    const double e0 = e_prev;
    for (int k = 0; k < 100000; ++k) {
        const Eigen::Vector2d dq_a(x[2], x[3]);
        x = rk4_step(rhs, x, k * h, h);
        const Eigen::Vector2d dq_b(x[2], x[3]);
        // trapezoid on dq' tau - b dq' dq
        const double p_a = dq_a.dot(tau) - p.joint_viscous_nms * dq_a.squaredNorm();
        const double p_b = dq_b.dot(tau) - p.joint_viscous_nms * dq_b.squaredNorm();
        work += 0.5 * h * (p_a + p_b);
    }
    const double e_final = manipulator_energy({x[0], x[1]}, {x[2], x[3]}, p);
    const double scale = std::max(1.0, std::abs(e_final - e0));
    CHECK(std::abs((e_final - e0) - work) / scale < 1e-4);
}

TEST_CASE("manipulator: locked first joint reduces to a pendulum") {
    const TwoLinkArmParams p;
    const Eigen::Vector2d q(0.5, -0.3);
    const Eigen::Vector2d dq(0.0, 0.7);  // first joint at rest
    const double tau2 = 12.0;

    Eigen::Matrix2d m, c;
    Eigen::Vector2d g;
    manipulator_matrices(q, dq, p, m, c, g);
    const double a3 = m(1, 1);
    const double pend_ddq2 =
        (tau2 - p.m2 * p.lc2 * p.gravity * std::cos(q[0] + q[1]) - p.joint_viscous_nms * dq[1]) / a3;

    // torque on joint 1 chosen to keep it locked
    const Eigen::Vector2d cdq = c * dq;
    const double tau1 = m(0, 1) * pend_ddq2 + cdq[0] + g[0];
    const auto dx = manipulator_derivatives(q, dq, {tau1, tau2}, p);
    CHECK(dx[2] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(dx[3] == doctest::Approx(pend_ddq2).epsilon(1e-9));
}

TEST_CASE("fault application reproduces the four actuator modes") {
    FaultSpec healthy;
    CHECK(apply_fault(healthy, 5.0, 100.0) == 5.0);

    FaultSpec degraded{FaultMode::Degraded, 15.0, 0.7, 0.0, 1.0};
    CHECK(apply_fault(degraded, 10.0, 20.0) == doctest::Approx(7.0));
    CHECK(apply_fault(degraded, 10.0, 14.999) == 10.0);  // before onset

    FaultSpec stuck{FaultMode::Stuck, 15.0, 1.0, 3.0, 1.0};
    CHECK(apply_fault(stuck, -50.0, 15.0) == 3.0);
    CHECK(apply_fault(stuck, apply_fault(stuck, -50.0, 15.0), 15.0) == 3.0);  // idempotent

    FaultSpec excessive{FaultMode::Excessive, 0.0, 1.0, 0.0, 1.8};
    CHECK(apply_fault(excessive, 10.0, 0.0) == doctest::Approx(18.0));

    // pure function: repeated evaluation is identical
    CHECK(apply_fault(degraded, 10.0, 20.0) == apply_fault(degraded, 10.0, 20.0));
}

TEST_CASE("fault spec validation") {
    FaultSpec bad{FaultMode::Degraded, 0.0, 1.5, 0.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    FaultSpec bad2{FaultMode::Excessive, 0.0, 1.0, 0.0, 0.9};
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("load profile interpolates and clamps") {
    LoadProfile load;
    load.time_s = {0.0, 8.0};
    load.force_n = {65000.0, 76000.0};
    load.validate();
    CHECK(load.value(-1.0) == 65000.0);
    CHECK(load.value(0.0) == 65000.0);
    CHECK(load.value(4.0) == doctest::Approx(70500.0));
    CHECK(load.value(9.0) == 76000.0);

    LoadProfile bad;
    bad.time_s = {0.0, 0.0};
    bad.force_n = {1.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
