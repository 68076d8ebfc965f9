#include "racsim/scenario.hpp"

#include "racsim/observers.hpp"
#include "racsim/rng.hpp"
#include "racsim/sf_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

namespace racsim {

ControllerVariant variant_from_string(const std::string& name) {
    if (name == "model_free") return ControllerVariant::ModelFree;
    if (name == "model_based") return ControllerVariant::ModelBased;
    if (name == "dnn_with_fallback") return ControllerVariant::DnnWithFallback;
    throw ConfigError("controller.variant", "unknown variant '" + name + "'");
}

std::string variant_name(ControllerVariant v) {
    switch (v) {
        case ControllerVariant::ModelFree: return "model_free";
        case ControllerVariant::ModelBased: return "model_based";
        case ControllerVariant::DnnWithFallback: return "dnn_with_fallback";
    }
    return "model_free";
}

double DisturbanceSpec::value(double t) const {
    switch (type) {
        case Type::None:
            return 0.0;
        case Type::Step: {
            if (t < onset_s) return 0.0;
            if (ramp_s > 0.0 && t < onset_s + ramp_s) {
                return magnitude * (t - onset_s) / ramp_s;
            }
            return magnitude;
        }
        case Type::Sine:
            if (t < onset_s) return 0.0;
            return magnitude * std::sin(2.0 * M_PI * frequency_hz * (t - onset_s));
    }
    return 0.0;
}

namespace {

std::string dir_of(const std::string& path) {
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    return base_dir + "/" + path;
}

DisturbanceSpec read_disturbance(const Config& cfg) {
    DisturbanceSpec d;
    const std::string type = cfg.get_string("disturbance.type", "none");
    if (type == "none") {
        d.type = DisturbanceSpec::Type::None;
        return d;
    }
    if (type == "step") {
        d.type = DisturbanceSpec::Type::Step;
    } else if (type == "sine") {
        d.type = DisturbanceSpec::Type::Sine;
    } else {
        throw ConfigError("disturbance.type", "expected none|step|sine");
    }
    d.onset_s = cfg.get_double("disturbance.onset_s", 0.0);
    d.magnitude = cfg.get_double("disturbance.magnitude");
    d.frequency_hz = cfg.get_double("disturbance.frequency_hz", 1.0);
    d.ramp_s = cfg.get_double("disturbance.ramp_s", 0.0);
    return d;
}

PpcEnvelope read_envelope(const Config& cfg) {
    PpcEnvelope env;
    env.overshoot = cfg.get_double("envelope.overshoot");
    env.steady_bound = cfg.get_double("envelope.steady_bound");
    env.rate = cfg.get_double("envelope.rate_per_s", 1.0);
    env.validate();
    return env;
}

Reference read_reference(const Config& cfg, const std::string& prefix) {
    const std::string type = cfg.get_string(prefix + ".type", "constant");
    Reference ref;
    if (type == "constant") {
        ref = constant_reference(cfg.get_double(prefix + ".value", 0.0));
    } else if (type == "quintic") {
        ref = quintic_reference(cfg.get_double(prefix + ".start", 0.0),
                                cfg.get_double(prefix + ".end"),
                                cfg.get_double(prefix + ".duration_s"));
    } else if (type == "quintic_cycle") {
        ref = quintic_cycle(cfg.get_double(prefix + ".start", 0.0),
                            cfg.get_double(prefix + ".end"),
                            cfg.get_double(prefix + ".half_period_s"));
    } else if (type == "ramp_hold") {
        ref = ramp_hold(cfg.get_double(prefix + ".target"), cfg.get_double(prefix + ".ramp_s"));
    } else {
        throw ConfigError(prefix + ".type", "unknown reference type '" + type + "'");
    }
    const double delay = cfg.get_double(prefix + ".delay_s", 0.0);
    if (delay > 0.0) {
        return [ref, delay](double t) { return ref(t - delay); };
    }
    return ref;
}

Reference read_reference_for(const Config& cfg, const std::string& specific,
                             const std::string& shared) {
    return cfg.has(specific + ".type") ? read_reference(cfg, specific)
                                       : read_reference(cfg, shared);
}

SaturationLimits read_limits(const Config& cfg, double def_min, double def_max) {
    SaturationLimits lim;
    lim.u_min = cfg.get_double("controller.u_min", def_min);
    lim.u_max = cfg.get_double("controller.u_max", def_max);
    if (!lim.valid()) throw ConfigError("controller.u_min", "need finite u_min < u_max");
    return lim;
}

std::vector<SubsystemGains> read_gains(const Config& cfg, const std::string& prefix, int stages,
                                       const std::vector<double>& g_hat_default) {
    const auto k = cfg.get_doubles(prefix + ".k");
    const auto gamma = cfg.get_doubles(prefix + ".gamma");
    const auto sigma = cfg.get_doubles(prefix + ".sigma");
    const auto epsilon = cfg.get_doubles(prefix + ".epsilon");
    const auto g_hat = cfg.get_doubles(prefix + ".g_hat", g_hat_default);
    auto check = [&](const std::vector<double>& v, const char* name) {
        if (static_cast<int>(v.size()) != stages) {
            throw ConfigError(prefix + "." + name,
                              "expected " + std::to_string(stages) + " values");
        }
    };
    check(k, "k");
    check(gamma, "gamma");
    check(sigma, "sigma");
    check(epsilon, "epsilon");
    check(g_hat, "g_hat");

    std::vector<SubsystemGains> gains(static_cast<std::size_t>(stages));
    for (int i = 0; i < stages; ++i) {
        gains[i] = {k[i], gamma[i], sigma[i], epsilon[i], g_hat[i]};
        gains[i].validate(prefix + ".subsystem" + std::to_string(i + 1));
    }
    return gains;
}

plants::LoadProfile read_load(const Config& cfg) {
    plants::LoadProfile load;
    if (!cfg.has("load.profile_kn")) {
        load.time_s = {0.0};
        load.force_n = {0.0};
        return load;
    }
    for (const auto& [t, kn] : cfg.get_pairs("load.profile_kn")) {
        load.time_s.push_back(t);
        load.force_n.push_back(kn * 1000.0);
    }
    load.validate();
    return load;
}

plants::FaultSpec read_fault(const Config& cfg, const std::string& prefix) {
    plants::FaultSpec spec;
    if (!cfg.has(prefix + ".mode")) return spec;
    spec.mode = plants::fault_mode_from_string(cfg.get_string(prefix + ".mode"));
    spec.onset_s = cfg.get_double(prefix + ".onset_s", 0.0);
    spec.degradation_factor = cfg.get_double(prefix + ".factor", 1.0);
    spec.stuck_value_nm = cfg.get_double(prefix + ".stuck_value_nm", 0.0);
    spec.excess_gain = cfg.get_double(prefix + ".gain", 1.0);
    spec.validate();
    return spec;
}

plants::EmlaParams read_emla_params(const Config& cfg) {
    plants::EmlaParams p;
    p.pm_flux_wb = cfg.get_double("plant.emla.pm_flux_wb", p.pm_flux_wb);
    p.pole_pairs = cfg.get_double("plant.emla.pole_pairs", p.pole_pairs);
    p.phase_resistance_ohm = cfg.get_double("plant.emla.phase_resistance_ohm", p.phase_resistance_ohm);
    p.phase_inductance_h = cfg.get_double("plant.emla.phase_inductance_h", p.phase_inductance_h);
    p.gear_ratio = cfg.get_double("plant.emla.gear_ratio", p.gear_ratio);
    p.screw_lead_m = cfg.get_double("plant.emla.screw_lead_m", p.screw_lead_m);
    p.rated_torque_nm = cfg.get_double("plant.emla.rated_torque_nm", p.rated_torque_nm);
    p.peak_torque_nm = cfg.get_double("plant.emla.peak_torque_nm", p.peak_torque_nm);
    p.rated_speed_rpm = cfg.get_double("plant.emla.rated_speed_rpm", p.rated_speed_rpm);
    p.rated_current_a = cfg.get_double("plant.emla.rated_current_a", p.rated_current_a);
    p.peak_current_a = cfg.get_double("plant.emla.peak_current_a", p.peak_current_a);
    p.load_mass_kg = cfg.get_double("plant.emla.load_mass_kg", p.load_mass_kg);
    p.viscous_friction_ns_per_m =
        cfg.get_double("plant.emla.viscous_friction_ns_per_m", p.viscous_friction_ns_per_m);
    p.screw_efficiency = cfg.get_double("plant.emla.screw_efficiency", p.screw_efficiency);
    p.validate();
    return p;
}

plants::HydraulicIwdParams read_iwd_params(const Config& cfg) {
    plants::HydraulicIwdParams p;
    p.gear_ratio = cfg.get_double("plant.iwd.gear_ratio", p.gear_ratio);
    p.wheel_diameter_m = cfg.get_double("plant.iwd.wheel_diameter_m", p.wheel_diameter_m);
    p.valve_time_constant_s = cfg.get_double("plant.iwd.valve_time_constant_s", p.valve_time_constant_s);
    p.torque_time_constant_s =
        cfg.get_double("plant.iwd.torque_time_constant_s", p.torque_time_constant_s);
    p.torque_gain_nm = cfg.get_double("plant.iwd.torque_gain_nm", p.torque_gain_nm);
    p.wheel_inertia_kgm2 = cfg.get_double("plant.iwd.wheel_inertia_kgm2", p.wheel_inertia_kgm2);
    p.wheel_viscous_nms = cfg.get_double("plant.iwd.wheel_viscous_nms", p.wheel_viscous_nms);
    p.validate();
    return p;
}

plants::TwoLinkArmParams read_arm_params(const Config& cfg) {
    plants::TwoLinkArmParams p;
    p.m1 = cfg.get_double("plant.arm.m1_kg", p.m1);
    p.m2 = cfg.get_double("plant.arm.m2_kg", p.m2);
    p.l1 = cfg.get_double("plant.arm.l1_m", p.l1);
    p.l2 = cfg.get_double("plant.arm.l2_m", p.l2);
    p.lc1 = cfg.get_double("plant.arm.lc1_m", p.lc1);
    p.lc2 = cfg.get_double("plant.arm.lc2_m", p.lc2);
    p.inertia1 = cfg.get_double("plant.arm.inertia1_kgm2", p.inertia1);
    p.inertia2 = cfg.get_double("plant.arm.inertia2_kgm2", p.inertia2);
    p.gravity = cfg.get_double("plant.arm.gravity_ms2", p.gravity);
    p.joint_viscous_nms = cfg.get_double("plant.arm.joint_viscous_nms", p.joint_viscous_nms);
    p.validate();
    return p;
}

Vec read_initial_state(const Config& cfg, int dim) {
    if (!cfg.has("initial_state")) return Vec::Zero(dim);
    const auto vals = cfg.get_doubles("initial_state");
    if (static_cast<int>(vals.size()) != dim) {
        throw ConfigError("initial_state", "expected " + std::to_string(dim) + " values");
    }
    Vec x0(dim);
    for (int i = 0; i < dim; ++i) x0[i] = vals[i];
    return x0;
}

/// Everything a rollout needs, with closures owning shared component state.
struct Wiring {
    Vec x0;
    DerivFn deriv;
    std::vector<ChainHookup> chains;
    MeasureFn measure;
    PreStepFn pre_step;
    TaskErrorFn task_errors;
    std::vector<std::unique_ptr<ChainController>> owned;
};

std::unique_ptr<RacController> make_rac(const Config& cfg, const std::string& prefix, int stages,
                                        const SaturationLimits& limits, bool model_based,
                                        std::vector<ModelTerm> terms,
                                        const std::vector<double>& g_hat_default) {
    auto gains = read_gains(cfg, prefix, stages, g_hat_default);
    if (!model_based) {
        return std::make_unique<RacController>(RacController::model_free(std::move(gains), limits));
    }
    return std::make_unique<RacController>(
        RacController::model_based(std::move(gains), limits, std::move(terms)));
}

Wiring build_benchmark2(const Scenario& sc) {
    const Config& cfg = sc.raw;
    Wiring w;
    w.x0 = read_initial_state(cfg, 2);

    const DisturbanceSpec dist = read_disturbance(cfg);
    const int dist_channel = static_cast<int>(cfg.get_int("disturbance.channel", 2));
    if (dist_channel < 1 || dist_channel > 2) {
        throw ConfigError("disturbance.channel", "benchmark2 has channels 1 and 2");
    }
    w.deriv = [dist, dist_channel](const Vec& x, const Vec& u, double t) {
        Vec dx(2);
        dx[0] = x[1] + (dist_channel == 1 ? dist.value(t) : 0.0);
        dx[1] = u[0] + (dist_channel == 2 ? dist.value(t) : 0.0);
        return dx;
    };

    const SaturationLimits limits = read_limits(cfg, -100.0, 100.0);
    const bool model_based = sc.variant == ControllerVariant::ModelBased;
    // The benchmark's modeling terms are exactly zero, so the model-based
    // variant carries explicit zero slots.
    std::vector<ModelTerm> terms;
    if (model_based) {
        terms.assign(2, [](std::span<const double>, double) { return 0.0; });
    }
    w.owned.push_back(make_rac(cfg, "controller", 2, limits, model_based, std::move(terms),
                               {1.0, 1.0}));

    ChainHookup chain;
    chain.state_idx = {0, 1};
    chain.limits = limits;
    chain.reference = read_reference(cfg, "reference");
    chain.primary = w.owned.back().get();
    w.chains.push_back(std::move(chain));
    return w;
}

Wiring build_emla(const Scenario& sc) {
    const Config& cfg = sc.raw;
    const auto params = read_emla_params(cfg);
    const auto load = read_load(cfg);
    const DisturbanceSpec dist = read_disturbance(cfg);
    // Keeps the d-axis pole (k + R)/L inside the integrator's stability disc
    // at the 1 kHz default step.
    const double d_axis_gain = cfg.get_double("plant.emla.d_axis_gain_v_per_a", 5.0);

    Wiring w;
    w.x0 = read_initial_state(cfg, 4);
    w.deriv = [params, load, dist, d_axis_gain](const Vec& x, const Vec& u, double t) {
        Eigen::Vector4d state = x;
        // The d-axis regulator lives drive-side; the chain controls v_q only.
        const Eigen::Vector2d input(u[0], -d_axis_gain * state[3]);
        const double f_load = load.value(t) + dist.value(t);
        return Vec(plants::emla_derivatives(state, input, params, f_load, t));
    };

    const SaturationLimits limits = read_limits(cfg, -350.0, 350.0);
    const bool model_based = sc.variant == ControllerVariant::ModelBased;

    const double kt = params.torque_constant();
    const double fpt = params.force_per_torque();
    const double g2 = kt * fpt / params.load_mass_kg;
    const double g3 = 1.0 / params.phase_inductance_h;

    std::vector<ModelTerm> terms;
    std::vector<double> g_hat_default = {1.0, 1.0, 1.0};
    if (model_based) {
        terms.resize(3);
        terms[1] = [params, kt, fpt](std::span<const double> x, double) {
            return -params.viscous_friction_ns_per_m * x[1] / (kt * fpt);
        };
        terms[2] = [params](std::span<const double> x, double) {
            const double omega_e =
                params.pole_pairs * x[1] * params.motor_speed_per_linear();
            return -(params.phase_resistance_ohm * x[2] +
                     omega_e * params.phase_inductance_h * x[3] + omega_e * params.pm_flux_wb);
        };
        g_hat_default = {1.0 / g2, g2 / g3, 1.0};
    }
    w.owned.push_back(
        make_rac(cfg, "controller", 3, limits, model_based, std::move(terms), g_hat_default));

    ChainHookup chain;
    chain.state_idx = {0, 1, 2};
    chain.limits = limits;
    chain.reference = read_reference(cfg, "reference");
    chain.primary = w.owned.back().get();
    w.chains.push_back(std::move(chain));

    // Optional encoder noise, optionally filtered through the motion observer.
    const double noise_std = cfg.get_double("measurement.position_noise_std_m", 0.0);
    const std::string observer = cfg.get_string("observer.type", "none");
    if (observer == "velocity") {
        auto obs = std::make_shared<ObserverState>();
        obs->l1 = cfg.get_double("observer.l1", obs->l1);
        obs->l2 = cfg.get_double("observer.l2", obs->l2);
        obs->validate();
        auto rng = std::make_shared<Rng>(sc.seed);
        w.measure = [obs, rng, noise_std, params, load](const Vec& x, double t, double h) {
            const double q_meas = x[0] + (noise_std > 0.0 ? noise_std * rng->gaussian() : 0.0);
            const double force_est = params.torque_constant() * params.force_per_torque() * x[2] -
                                     load.value(t) -
                                     params.viscous_friction_ns_per_m * obs->v_hat;
            *obs = velocity_observer_step(q_meas, force_est, *obs, params.load_mass_kg, h);
            Vec meas = x;
            meas[0] = obs->q_hat;
            meas[1] = obs->v_hat;
            return meas;
        };
    } else if (noise_std > 0.0) {
        auto rng = std::make_shared<Rng>(sc.seed);
        w.measure = [rng, noise_std](const Vec& x, double, double) {
            Vec meas = x;
            meas[0] += noise_std * rng->gaussian();
            return meas;
        };
    }
    return w;
}

Wiring build_manipulator(const Scenario& sc) {
    const Config& cfg = sc.raw;
    const auto params = read_arm_params(cfg);
    const plants::FaultSpec fault1 = read_fault(cfg, "fault.joint1");
    const plants::FaultSpec fault2 = read_fault(cfg, "fault.joint2");

    Wiring w;
    w.x0 = read_initial_state(cfg, 4);
    w.deriv = [params, fault1, fault2](const Vec& x, const Vec& u, double t) {
        const Eigen::Vector2d q(x[0], x[1]);
        const Eigen::Vector2d dq(x[2], x[3]);
        const Eigen::Vector2d tau(plants::apply_fault(fault1, u[0], t),
                                  plants::apply_fault(fault2, u[1], t));
        const Eigen::Vector4d d = plants::manipulator_derivatives(q, dq, tau, params);
        Vec dx(4);
        dx << d[0], d[1], d[2], d[3];
        return dx;
    };

    const SaturationLimits limits = read_limits(cfg, -2000.0, 2000.0);
    const bool model_based = sc.variant == ControllerVariant::ModelBased;

    for (int j = 0; j < 2; ++j) {
        std::vector<ModelTerm> terms;
        if (model_based) {
            terms.resize(2);
            terms[1] = [params, j](std::span<const double> x, double) {
                const Eigen::Vector2d q(x[0], x[1]);
                const Eigen::Vector2d dq(x[2], x[3]);
                Eigen::Matrix2d m, c;
                Eigen::Vector2d g;
                plants::manipulator_matrices(q, dq, params, m, c, g);
                const Eigen::Vector2d coupling = c * dq;
                return -(coupling[j] + g[j] + params.joint_viscous_nms * dq[j]);
            };
        }
        const std::string prefix =
            cfg.has("controller.joint" + std::to_string(j + 1) + ".k")
                ? "controller.joint" + std::to_string(j + 1)
                : "controller";
        w.owned.push_back(make_rac(cfg, prefix, 2, limits, model_based, std::move(terms),
                                   {1.0, 1.0}));

        ChainHookup chain;
        chain.state_idx = {j, j + 2};
        chain.limits = limits;
        chain.reference = read_reference_for(cfg, "reference.joint" + std::to_string(j + 1),
                                             "reference");
        chain.primary = w.owned.back().get();
        w.chains.push_back(std::move(chain));
    }
    return w;
}

Wiring build_iwd(const Scenario& sc) {
    const Config& cfg = sc.raw;
    const auto params = read_iwd_params(cfg);
    const DisturbanceSpec dist = read_disturbance(cfg);

    Wiring w;
    w.x0 = read_initial_state(cfg, 3);
    w.deriv = [params, dist](const Vec& x, const Vec& u, double t) {
        return Vec(plants::hydraulic_iwd_derivatives(x, u[0], params, dist.value(t), t));
    };

    const SaturationLimits limits = read_limits(cfg, -1.0, 1.0);
    const Reference wheel_ref = read_reference(cfg, "reference");
    const bool model_based = sc.variant == ControllerVariant::ModelBased;

    const std::string observer = cfg.get_string("observer.type", "none");
    if (observer == "torque") {
        // Torque-observed cascade: the observer integrates the wheel velocity
        // error into a torque reference for the hydraulic chain.
        auto obs = std::make_shared<ObserverState>();
        TorqueObserverGains ogains;
        ogains.gamma_tau = cfg.get_double("observer.gamma_tau", 2000.0);
        ogains.sigma_tau = cfg.get_double("observer.sigma_tau", 0.5);
        ogains.validate();

        w.pre_step = [obs, ogains, wheel_ref](double t, const Vec& x_meas, double h) {
            *obs = torque_observer_step(x_meas[0], wheel_ref(t).q, *obs, ogains, h);
        };
        w.task_errors = [wheel_ref](double t, const Vec& x) {
            return std::vector<std::pair<int, double>>{{0, x[0] - wheel_ref(t).q}};
        };

        std::vector<ModelTerm> terms;
        // Connector scalings stay configuration-driven here: the
        // Lyapunov-exact values are far too hot for a unit valve command at
        // this sample rate.
        const std::vector<double> g_hat_default = {1.0 / params.torque_gain_nm, 1.0};
        if (model_based) {
            terms.resize(2);
            terms[0] = [params](std::span<const double> x, double) {
                return -x[1] / params.torque_gain_nm;
            };
            terms[1] = [](std::span<const double> x, double) { return -x[2]; };
        }
        w.owned.push_back(
            make_rac(cfg, "controller", 2, limits, model_based, std::move(terms), g_hat_default));

        ChainHookup chain;
        chain.state_idx = {1, 2};
        chain.limits = limits;
        chain.reference = [obs](double) { return RefPoint{obs->tau_hat, 0.0, 0.0}; };
        chain.primary = w.owned.back().get();
        w.chains.push_back(std::move(chain));
        return w;
    }

    // Direct velocity chain over the whole plant.
    std::vector<ModelTerm> terms;
    const std::vector<double> g_hat_default = {params.wheel_viscous_nms / params.gear_ratio,
                                               1.0 / params.torque_gain_nm, 1.0};
    if (model_based) {
        terms.resize(3);
        terms[0] = [params](std::span<const double> x, double) {
            return -params.wheel_viscous_nms * x[0] / params.gear_ratio;
        };
        terms[1] = [params](std::span<const double> x, double) {
            return -x[1] / params.torque_gain_nm;
        };
        terms[2] = [](std::span<const double> x, double) { return -x[2]; };
    }

    std::unique_ptr<ChainController> rac =
        make_rac(cfg, "controller", 3, limits, model_based, std::move(terms), g_hat_default);

    ChainHookup chain;
    chain.state_idx = {0, 1, 2};
    chain.limits = limits;
    chain.reference = wheel_ref;

    if (sc.variant == ControllerVariant::DnnWithFallback) {
        const std::string policy_path = resolve(sc.base_dir, cfg.get_string("policy.file"));
        auto dnn = std::make_unique<DnnController>(PolicyNet::load_file(policy_path), limits, 3);
        chain.primary = dnn.get();
        chain.fallback = rac.get();
        w.owned.push_back(std::move(dnn));
        w.owned.push_back(std::move(rac));
    } else {
        chain.primary = rac.get();
        w.owned.push_back(std::move(rac));
    }
    w.chains.push_back(std::move(chain));
    return w;
}

Wiring build_wiring(const Scenario& sc) {
    if (sc.plant == "benchmark2") return build_benchmark2(sc);
    if (sc.plant == "emla") return build_emla(sc);
    if (sc.plant == "manipulator2") return build_manipulator(sc);
    if (sc.plant == "hydraulic_iwd") return build_iwd(sc);
    throw ConfigError("plant", "unknown plant '" + sc.plant + "'");
}

}  // namespace

Scenario Scenario::load(const std::string& path) {
    return from_config(Config::load(path), dir_of(path));
}

Scenario Scenario::from_config(Config cfg, const std::string& base_dir) {
    Scenario sc;
    sc.raw = std::move(cfg);
    sc.base_dir = base_dir.empty() ? "." : base_dir;
    sc.name = sc.raw.get_string("name", sc.raw.origin());
    sc.plant = sc.raw.get_string("plant");
    sc.variant = variant_from_string(sc.raw.get_string("controller.variant", "model_free"));
    sc.duration_s = sc.raw.get_double("duration_s");
    sc.step_s = sc.raw.get_double("step_s", 1e-3);
    sc.seed = static_cast<std::uint64_t>(sc.raw.get_int("seed", 0));
    sc.validate();
    return sc;
}

void Scenario::validate() const {
    if (plant != "benchmark2" && plant != "emla" && plant != "manipulator2" &&
        plant != "hydraulic_iwd") {
        throw ConfigError("plant", "unknown plant '" + plant + "'");
    }
    if (variant == ControllerVariant::DnnWithFallback && plant != "hydraulic_iwd") {
        throw ConfigError("controller.variant",
                          "dnn_with_fallback is wired for the hydraulic_iwd plant");
    }
    if (!(duration_s > 0.0)) throw ConfigError("duration_s", "must be > 0");
    if (!(step_s > 0.0)) throw ConfigError("step_s", "must be > 0");
    const double steps = duration_s / step_s;
    if (std::abs(steps - std::round(steps)) > 1e-6) {
        throw ConfigError("duration_s", "must be an integer number of steps");
    }
    read_envelope(raw);
    const double frac = raw.get_double("supervisor.switch_fraction", 0.8);
    if (!(frac > 0.0 && frac < 1.0)) {
        throw ConfigError("supervisor.switch_fraction", "must lie in (0, 1)");
    }
}

RunResult run_scenario(const Scenario& sc) {
    sc.validate();
    Wiring w = build_wiring(sc);

    LoopOptions opts;
    opts.duration_s = sc.duration_s;
    opts.step_s = sc.step_s;
    opts.envelope = read_envelope(sc.raw);
    opts.switch_fraction = sc.raw.get_double("supervisor.switch_fraction", 0.8);
    opts.measure = w.measure;
    opts.pre_step = w.pre_step;
    opts.task_errors = w.task_errors;

    RunResult result;
    result.trace = run_closed_loop(w.deriv, w.chains, opts, w.x0);
    result.metrics =
        compute_metrics(result.trace, sc.raw.get_double("metrics.band_fraction", 0.02));
    return result;
}

Metrics compute_metrics(const Trace& trace, double band_fraction) {
    if (trace.rows.empty()) throw ConfigError("metrics", "empty trace");

    Metrics m;
    auto rms_over = [&trace](const std::vector<int>& idx) {
        if (idx.empty()) return 0.0;
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& row : trace.rows) {
            for (int i : idx) {
                acc += row.e[i] * row.e[i];
                ++n;
            }
        }
        return std::sqrt(acc / static_cast<double>(n));
    };
    m.position_rmse = rms_over(trace.primary_error_idx);
    m.velocity_rmse = rms_over(trace.secondary_error_idx);

    for (const auto& row : trace.rows) {
        for (int c = 0; c < trace.chain_count; ++c) {
            m.peak_abs_u = std::max(m.peak_abs_u, std::abs(row.u_sat[c]));
        }
        if (row.event == StepEvent::Shutdown) ++m.envelope_violations;
    }

    m.shutdown = trace.shutdown();
    m.shutdown_time_s = trace.shutdown_time();
    m.switched = trace.switched();
    m.switch_time_s = trace.switch_time();

    // Settling: last time the aggregate tracking error leaves the band. The
    // band scales with the reference span (recovered as x - e), falling back
    // to the initial error for pure regulation runs.
    double ref_span = 0.0;
    double ref_abs = 0.0;
    for (int i : trace.primary_error_idx) {
        double rmin = std::numeric_limits<double>::infinity();
        double rmax = -rmin;
        for (const auto& row : trace.rows) {
            const double r = row.x[i] - row.e[i];
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
        ref_span = std::max(ref_span, rmax - rmin);
        ref_abs = std::max(ref_abs, std::max(std::abs(rmin), std::abs(rmax)));
    }
    // The reference is recovered as x - e, which leaves roundoff on constant
    // references; a span at that scale means a regulation run.
    if (ref_span <= 1e-9 * std::max(1.0, ref_abs)) ref_span = 0.0;
    auto agg_err = [&trace](const TraceRow& row) {
        double s = 0.0;
        for (int i : trace.primary_error_idx) s += row.e[i] * row.e[i];
        return std::sqrt(s);
    };
    double band = band_fraction * ref_span;
    if (band <= 0.0) band = band_fraction * agg_err(trace.rows.front());

    long long last_outside = -1;
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        if (agg_err(trace.rows[k]) > band) last_outside = static_cast<long long>(k);
    }
    if (last_outside + 1 < static_cast<long long>(trace.rows.size())) {
        m.settled = true;
        m.settling_time_s = trace.rows[static_cast<std::size_t>(last_outside + 1)].t;
    } else if (last_outside < 0) {
        m.settled = true;
        m.settling_time_s = trace.rows.front().t;
    } else {
        m.settled = false;
        m.settling_time_s = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

double steady_state_error(const Trace& trace, double tail_fraction) {
    if (trace.rows.empty()) throw ConfigError("metrics", "empty trace");
    const std::size_t n = trace.rows.size();
    const std::size_t start = n - std::max<std::size_t>(1, static_cast<std::size_t>(
                                                               tail_fraction * static_cast<double>(n)));
    double worst = 0.0;
    for (std::size_t k = start; k < n; ++k) {
        double s = 0.0;
        for (int i : trace.primary_error_idx) s += trace.rows[k].e[i] * trace.rows[k].e[i];
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

namespace {

void metrics_cells(std::ostream& out, const Metrics& m) {
    out << format_double(m.position_rmse) << ',' << format_double(m.velocity_rmse) << ',';
    if (m.settled) {
        out << format_double(m.settling_time_s);
    } else {
        out << "unsettled";
    }
    out << ',' << format_double(m.peak_abs_u) << ',' << m.envelope_violations << ',';
    if (m.switched) {
        out << format_double(m.switch_time_s);
    } else {
        out << "none";
    }
    out << ',';
    if (m.shutdown) {
        out << format_double(m.shutdown_time_s);
    } else {
        out << "none";
    }
}

constexpr const char* kMetricsHeader =
    "position_rmse,velocity_rmse,settling_time_s,peak_abs_u,envelope_violations,"
    "switch_time_s,shutdown_time_s";

}  // namespace

void write_metrics_csv(std::ostream& out, const Metrics& m) {
    out << kMetricsHeader << '\n';
    metrics_cells(out, m);
    out << '\n';
}

std::vector<CompareCell> compare(const std::vector<Scenario>& scenarios,
                                 const std::vector<ControllerVariant>& controllers,
                                 par::Exec exec) {
    if (scenarios.empty() || controllers.empty()) {
        throw ConfigError("compare", "need at least one scenario and one controller");
    }
    std::vector<CompareCell> cells(scenarios.size() * controllers.size());
    par::for_indexed(cells.size(), exec, [&](std::size_t i) {
        const std::size_t si = i / controllers.size();
        const std::size_t ci = i % controllers.size();
        CompareCell& cell = cells[i];
        cell.scenario = scenarios[si].name;
        cell.controller = variant_name(controllers[ci]);
        try {
            Scenario sc = scenarios[si];
            sc.raw.set("controller.variant", cell.controller);
            sc.variant = controllers[ci];
            cell.metrics = run_scenario(sc).metrics;
            cell.ok = true;
        } catch (const std::exception& ex) {
            cell.ok = false;
            cell.error = ex.what();
        }
    });
    return cells;
}

void write_compare_csv(std::ostream& out, const std::vector<CompareCell>& cells) {
    out << "scenario,controller,status," << kMetricsHeader << ",error\n";
    for (const auto& cell : cells) {
        out << cell.scenario << ',' << cell.controller << ',' << (cell.ok ? "ok" : "error") << ',';
        if (cell.ok) {
            metrics_cells(out, cell.metrics);
            out << ',';
        } else {
            out << ",,,,,,,";
        }
        std::string msg = cell.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << msg << '\n';
    }
}

TuneJob TuneJob::from_scenario(const Scenario& sc) {
    TuneJob job;
    const auto keys = sc.raw.keys_with_prefix("tune.");
    std::vector<double> lo, hi;
    for (const auto& key : keys) {
        const std::string target = key.substr(5);
        if (target.rfind("weight_", 0) == 0) continue;
        const auto bounds = sc.raw.get_doubles(key);
        if (bounds.size() != 2 || !(bounds[0] < bounds[1])) {
            throw ConfigError(key, "expected 'lo hi' bounds");
        }
        if (!sc.raw.has(target)) {
            throw ConfigError(key, "tuned key '" + target + "' not present in the scenario");
        }
        const int arity = static_cast<int>(sc.raw.get_doubles(target).size());
        job.keys.push_back(target);
        job.arity.push_back(arity);
        for (int i = 0; i < arity; ++i) {
            lo.push_back(bounds[0]);
            hi.push_back(bounds[1]);
        }
    }
    if (job.keys.empty()) {
        throw ConfigError("tune", "no tune.<key> bounds declared in the scenario");
    }
    job.box.lo = Eigen::Map<const Vec>(lo.data(), static_cast<int>(lo.size()));
    job.box.hi = Eigen::Map<const Vec>(hi.data(), static_cast<int>(hi.size()));
    job.weight_position = sc.raw.get_double("tune.weight_position", 1.0);
    job.weight_velocity = sc.raw.get_double("tune.weight_velocity", 0.0);
    return job;
}

Config TuneJob::gains_to_config(const Vec& gains) const {
    Config cfg;
    int at = 0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        std::vector<double> vals(static_cast<std::size_t>(arity[k]));
        for (int i = 0; i < arity[k]; ++i) vals[static_cast<std::size_t>(i)] = gains[at++];
        cfg.set_doubles(keys[k], vals);
    }
    return cfg;
}

TuneResult tune_scenario(const Scenario& sc, int pop_size, int max_iters, std::uint64_t seed,
                         par::Exec exec) {
    const TuneJob job = TuneJob::from_scenario(sc);

    CostFn cost = [&sc, &job](const Vec& gains) {
        Scenario trial = sc;
        trial.apply_overlay(job.gains_to_config(gains));
        try {
            const RunResult rr = run_scenario(trial);
            return tracking_cost(rr.trace, job.weight_position, job.weight_velocity);
        } catch (const ConfigError&) {
            // A box corner can make a gain combination invalid; treat it like
            // any other failed candidate.
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    JayaOptions opts;
    opts.pop_size = pop_size;
    opts.max_iters = max_iters;
    opts.seed = seed;
    opts.exec = exec;

    TuneResult result;
    result.jaya = jaya_optimize(cost, job.box, opts);
    result.gains = job.gains_to_config(result.jaya.best.gains);
    return result;
}

TrainResult train_policy(const Scenario& sc) {
    if (sc.plant != "hydraulic_iwd") {
        throw ConfigError("train", "policy training is wired for the hydraulic_iwd plant");
    }
    const Config& cfg = sc.raw;
    const auto params = read_iwd_params(cfg);

    RampProfile ramp;
    ramp.id = sc.name;
    ramp.shape = cfg.get_string("train.ramp_shape", "ramp");
    ramp.duration_s = cfg.get_double("train.ramp_duration_s", 30.0);
    ramp.step_s = sc.step_s;
    ramp.max_command = cfg.get_double("train.ramp_max_command", 0.8);
    ramp.measurement_noise_std = cfg.get_double("train.measurement_noise_std", 0.0);
    ramp.feature_horizon_steps = static_cast<int>(cfg.get_int("train.horizon_steps", 1));

    auto state = std::make_shared<Eigen::Vector3d>(Eigen::Vector3d::Zero());
    PlantStepFn plant_step = [state, params](double u, double t, double h) {
        const Vec next = rk4_step(
            [&](const Vec& xs, double ts) {
                return Vec(plants::hydraulic_iwd_derivatives(xs, u, params, 0.0, ts));
            },
            Vec(*state), t, h);
        *state = next;
        return next[0];
    };

    const std::uint64_t noise_seed =
        static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<std::int64_t>(sc.seed)));
    Dataset full = generate_dataset(plant_step, ramp, noise_seed);

    const int stride = static_cast<int>(cfg.get_int("train.subsample", 1));
    if (stride < 1) throw ConfigError("train.subsample", "must be >= 1");
    Dataset data;
    data.provenance = full.provenance;
    const int rows = (full.rows() + stride - 1) / stride;
    data.inputs.resize(rows, full.inputs.cols());
    data.targets.resize(rows);
    for (int r = 0; r < rows; ++r) {
        data.inputs.row(r) = full.inputs.row(r * stride);
        data.targets[r] = full.targets[r * stride];
    }

    std::vector<int> layers = {4};
    for (double hsize : cfg.get_doubles("train.hidden", {16.0, 16.0})) {
        layers.push_back(static_cast<int>(hsize));
    }
    layers.push_back(1);

    TrainResult result;
    result.net = PolicyNet::make(layers);
    result.net.randomize(static_cast<std::uint64_t>(cfg.get_int("train.init_seed", 1)));

    LmOptions lm;
    lm.mu0 = cfg.get_double("train.mu0", 1e-2);
    lm.mu_factor = cfg.get_double("train.mu_factor", 10.0);
    lm.max_iters = static_cast<int>(cfg.get_int("train.max_iters", 80));
    result.lm = lm_train(result.net, data, lm);
    result.data = std::move(data);
    return result;
}

DnnController::DnnController(PolicyNet net, SaturationLimits limits, int chain_len)
    : net_(std::move(net)), limits_(std::move(limits)),
      errors_(static_cast<std::size_t>(chain_len), 0.0) {
    net_.validate();
    if (net_.input_dim() != 4) {
        throw ConfigError("policy.layers", "policy controller expects 4 input features");
    }
}

void DnnController::reset() {
    std::fill(errors_.begin(), errors_.end(), 0.0);
}

ControlOutput DnnController::step(std::span<const double> x_chain, std::span<const double>,
                                  const RefPoint& ref, double t, double) {
    const double tracked = x_chain[0];
    Vec features(4);
    features << ref.q - tracked, ref.q, ref.qd, tracked;
    const double u_presat = net_.forward(features);
    if (!std::isfinite(u_presat)) {
        throw NumericError("non-finite policy output", 1, t);
    }
    errors_[0] = tracked - ref.q;
    return {u_presat, saturate(u_presat, limits_)};
}

}  // namespace racsim
