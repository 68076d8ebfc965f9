#pragma once

#include "racsim/parallel.hpp"
#include "racsim/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace racsim {

/// Small feedforward policy: tanh hidden layers, linear scalar output.
/// Features are affinely normalized to the ranges recorded at training time,
/// so a serialized net is self-contained.
struct PolicyNet {
    std::vector<int> layer_sizes;  // input, hidden..., output (must end in 1)
    std::vector<Mat> weights;      // weights[l] is layer_sizes[l+1] x layer_sizes[l]
    std::vector<Vec> biases;
    Vec feature_offset;  // z = (f - offset) * scale
    Vec feature_scale;

    static PolicyNet make(const std::vector<int>& layer_sizes);

    void validate() const;
    int input_dim() const { return layer_sizes.front(); }
    int weight_count() const;

    Vec flatten() const;
    void unflatten(const Vec& w);

    /// Random small-weight initialization, deterministic per seed.
    void randomize(std::uint64_t seed);

    double forward(const Vec& features) const;

    void save_file(const std::string& path) const;
    static PolicyNet load_file(const std::string& path);
};

/// Supervised (features -> command) pairs plus where they came from.
struct Dataset {
    Mat inputs;   // rows are samples
    Vec targets;  // recorded commands
    std::string provenance;

    int rows() const { return static_cast<int>(inputs.rows()); }
    void validate() const;
};

/// Residuals r_i = net(x_i) - y_i.
Vec policy_residuals(const PolicyNet& net, const Dataset& data);

/// Jacobian of the residuals with respect to the flattened weights, one row
/// per sample. Rows are independent, so the parallel backend is bit-exact
/// against the serial one.
Mat policy_jacobian(const PolicyNet& net, const Dataset& data,
                    par::Exec exec = par::default_exec());

struct LmOptions {
    double mu0 = 1e-2;
    double mu_factor = 10.0;
    int max_iters = 100;       // counts accepted and rejected trials
    double mu_max = 1e64;      // damping overflow stop
    double sse_stop = 1e-16;
    par::Exec exec = par::default_exec();
};

struct LmResult {
    std::vector<double> sse_history;  // initial SSE, then each accepted SSE
    int iterations = 0;
    int accepted = 0;
    double final_sse = 0.0;
    double final_mu = 0.0;
};

/// Damped Gauss-Newton training on sum-of-squares loss: solve
/// (J^T J + mu I) dw = -J^T r, accept the step and relax mu when the SSE
/// drops, otherwise reject and stiffen mu. Normalization is frozen from the
/// dataset ranges on entry if the net does not carry one yet.
LmResult lm_train(PolicyNet& net, const Dataset& data, const LmOptions& opts);

/// Open-loop excitation for data collection: the command rises gradually to
/// max_command (shape "ramp"), or sweeps up and back down ("triangle").
struct RampProfile {
    std::string id = "ramp";
    std::string shape = "ramp";
    double duration_s = 30.0;
    double step_s = 1e-3;
    double max_command = 1.0;
    double measurement_noise_std = 0.0;
    // How far ahead the recorded response acts as the row's reference. Larger
    // horizons give the error feature closed-loop-like magnitudes.
    int feature_horizon_steps = 1;

    double command(double t) const;
    void validate() const;
};

/// Advances the plant one step under command u and returns the tracked
/// output after the step.
using PlantStepFn = std::function<double(double u, double t, double h)>;

/// Rolls the plant open-loop along the ramp and logs one (features, command)
/// row per step for supervised inversion. With horizon H, row k reads
/// [y_{k+H} - y_k, y_{k+H}, (y_{k+H} - y_k)/(H h), y_k] (clamped at the end
/// of the record) with the applied command as the target.
Dataset generate_dataset(const PlantStepFn& plant_step, const RampProfile& ramp,
                         std::uint64_t noise_seed);

}  // namespace racsim
