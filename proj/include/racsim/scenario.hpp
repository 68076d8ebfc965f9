#pragma once

#include "racsim/config.hpp"
#include "racsim/parallel.hpp"
#include "racsim/plants.hpp"
#include "racsim/policy.hpp"
#include "racsim/safety.hpp"
#include "racsim/simulate.hpp"
#include "racsim/trace.hpp"
#include "racsim/tuner.hpp"
#include "racsim/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace racsim {

enum class ControllerVariant { ModelFree, ModelBased, DnnWithFallback };

ControllerVariant variant_from_string(const std::string& name);
std::string variant_name(ControllerVariant v);

struct DisturbanceSpec {
    enum class Type { None, Step, Sine } type = Type::None;
    double onset_s = 0.0;
    double magnitude = 0.0;
    double frequency_hz = 1.0;
    double ramp_s = 0.0;  // rise time of the step front

    double value(double t) const;
};

/// A full experiment description: plant, controller variant, safety envelope,
/// reference, disturbance/fault schedule and the numerics. Everything comes
/// from one config file; `raw` keeps the parsed tree so tuned gain blocks can
/// be overlaid and written back in the same format.
struct Scenario {
    std::string name;
    std::string plant;  // emla | hydraulic_iwd | manipulator2 | benchmark2
    ControllerVariant variant = ControllerVariant::ModelFree;
    double duration_s = 1.0;
    double step_s = 1e-3;
    std::uint64_t seed = 0;
    Config raw;
    std::string base_dir;  // directory of the scenario file, for relative paths

    static Scenario load(const std::string& path);
    static Scenario from_config(Config cfg, const std::string& base_dir);

    /// Overlays a gain block (same key/value format) on the configuration.
    void apply_overlay(const Config& overlay) { raw.merge(overlay); }

    void validate() const;
};

struct Metrics {
    double position_rmse = 0.0;
    double velocity_rmse = 0.0;
    bool settled = false;
    double settling_time_s = 0.0;
    double peak_abs_u = 0.0;
    int envelope_violations = 0;
    bool switched = false;
    double switch_time_s = 0.0;
    bool shutdown = false;
    double shutdown_time_s = 0.0;
};

/// Metrics are a pure function of the trace; a trace re-read from CSV yields
/// the same numbers bit for bit (single-chain column conventions).
Metrics compute_metrics(const Trace& trace, double band_fraction = 0.02);

void write_metrics_csv(std::ostream& out, const Metrics& m);

struct RunResult {
    Trace trace;
    Metrics metrics;
};

/// Wires the scenario's plant, controllers, observers and supervisor and
/// rolls it out. Deterministic per seed.
RunResult run_scenario(const Scenario& sc);

/// Steady-state tracking error: mean |primary error| over the trailing
/// fraction of the trace.
double steady_state_error(const Trace& trace, double tail_fraction = 0.2);

struct CompareCell {
    std::string scenario;
    std::string controller;
    bool ok = false;
    std::string error;
    Metrics metrics;
};

/// Runs every (scenario, controller variant) pair. Cells fan out on the
/// parallel backend and merge by input index; one failing cell does not abort
/// the table.
std::vector<CompareCell> compare(const std::vector<Scenario>& scenarios,
                                 const std::vector<ControllerVariant>& controllers,
                                 par::Exec exec = par::default_exec());

void write_compare_csv(std::ostream& out, const std::vector<CompareCell>& cells);

/// Tuning job declared by the scenario's tune.* keys: every `tune.<key> = lo hi`
/// entry exposes that (vector-valued) config key to the optimizer.
struct TuneJob {
    std::vector<std::string> keys;       // config keys, in deterministic order
    std::vector<int> arity;              // elements per key
    TunerBox box;
    double weight_position = 1.0;
    double weight_velocity = 0.0;

    static TuneJob from_scenario(const Scenario& sc);
    Config gains_to_config(const Vec& gains) const;
};

struct TuneResult {
    Config gains;  // optimized gain block
    JayaResult jaya;
};

TuneResult tune_scenario(const Scenario& sc, int pop_size, int max_iters, std::uint64_t seed,
                         par::Exec exec = par::default_exec());

/// Rolls the scenario's plant open-loop along the configured ramp, trains the
/// policy net and returns it together with the training record.
struct TrainResult {
    PolicyNet net;
    LmResult lm;
    Dataset data;
};

TrainResult train_policy(const Scenario& sc);

/// DNN policy as a chain controller: features are
/// [error, reference, reference rate, tracked state].
class DnnController : public ChainController {
public:
    DnnController(PolicyNet net, SaturationLimits limits, int chain_len);

    ControlOutput step(std::span<const double> x_chain, std::span<const double> x_full,
                       const RefPoint& ref, double t, double h) override;
    void reset() override;
    PolicyTag tag() const override { return PolicyTag::Dnn; }
    const std::vector<double>& subsystem_errors() const override { return errors_; }

private:
    PolicyNet net_;
    SaturationLimits limits_;
    std::vector<double> errors_;
};

}  // namespace racsim
