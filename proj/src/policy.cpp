#include "racsim/policy.hpp"

#include "racsim/rng.hpp"
#include "racsim/trace.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace racsim {

PolicyNet PolicyNet::make(const std::vector<int>& layer_sizes) {
    PolicyNet net;
    net.layer_sizes = layer_sizes;
    net.validate();
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        net.weights.emplace_back(Mat::Zero(layer_sizes[l + 1], layer_sizes[l]));
        net.biases.emplace_back(Vec::Zero(layer_sizes[l + 1]));
    }
    return net;
}

void PolicyNet::validate() const {
    if (layer_sizes.size() < 2) {
        throw ConfigError("policy.layers", "need at least input and output sizes");
    }
    for (int s : layer_sizes) {
        if (s < 1) throw ConfigError("policy.layers", "layer sizes must be >= 1");
    }
    if (layer_sizes.back() != 1) {
        throw ConfigError("policy.layers", "output layer must be scalar");
    }
    if (!weights.empty()) {
        if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
            throw ConfigError("policy.layers", "weight shapes do not match declared sizes");
        }
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
                biases[l].size() != layer_sizes[l + 1]) {
                throw ConfigError("policy.layers", "weight shapes do not match declared sizes");
            }
            if (!weights[l].allFinite() || !biases[l].allFinite()) {
                throw ConfigError("policy.weights", "non-finite weight");
            }
        }
    }
}

int PolicyNet::weight_count() const {
    int n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += static_cast<int>(weights[l].size() + biases[l].size());
    }
    return n;
}

Vec PolicyNet::flatten() const {
    Vec w(weight_count());
    int at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (int r = 0; r < weights[l].rows(); ++r) {
            for (int c = 0; c < weights[l].cols(); ++c) w[at++] = weights[l](r, c);
        }
        for (int r = 0; r < biases[l].size(); ++r) w[at++] = biases[l][r];
    }
    return w;
}

void PolicyNet::unflatten(const Vec& w) {
    if (w.size() != weight_count()) {
        throw ConfigError("policy.weights", "flattened size mismatch");
    }
    int at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (int r = 0; r < weights[l].rows(); ++r) {
            for (int c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = w[at++];
        }
        for (int r = 0; r < biases[l].size(); ++r) biases[l][r] = w[at++];
    }
}

void PolicyNet::randomize(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
        for (int r = 0; r < weights[l].rows(); ++r) {
            for (int c = 0; c < weights[l].cols(); ++c) {
                weights[l](r, c) = rng.uniform(-scale, scale);
            }
        }
        biases[l].setZero();
    }
}

namespace {

Vec normalize_features(const PolicyNet& net, const Vec& features) {
    if (net.feature_offset.size() == 0) return features;
    return (features - net.feature_offset).cwiseProduct(net.feature_scale);
}

}  // namespace

double PolicyNet::forward(const Vec& features) const {
    if (features.size() != input_dim()) {
        throw ConfigError("policy.input", "feature dimension mismatch");
    }
    Vec z = normalize_features(*this, features);
    const std::size_t last = weights.size() - 1;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Vec a = weights[l] * z + biases[l];
        z = (l == last) ? a : a.array().tanh().matrix();
    }
    return z[0];
}

void Dataset::validate() const {
    if (inputs.rows() == 0 || inputs.rows() != targets.size()) {
        throw ConfigError("dataset", "need one target per input row");
    }
    if (!inputs.allFinite() || !targets.allFinite()) {
        throw ConfigError("dataset", "non-finite sample");
    }
}

Vec policy_residuals(const PolicyNet& net, const Dataset& data) {
    Vec r(data.rows());
    for (int i = 0; i < data.rows(); ++i) {
        r[i] = net.forward(data.inputs.row(i).transpose()) - data.targets[i];
    }
    return r;
}

Mat policy_jacobian(const PolicyNet& net, const Dataset& data, par::Exec exec) {
    const int n = data.rows();
    const int p = net.weight_count();
    Mat jac(n, p);
    const std::size_t layers = net.weights.size();

    par::for_indexed(static_cast<std::size_t>(n), exec, [&](std::size_t row) {
        // Forward pass, keeping every activation for the backward sweep.
        std::vector<Vec> z(layers + 1);
        z[0] = normalize_features(net, data.inputs.row(static_cast<int>(row)).transpose());
        for (std::size_t l = 0; l < layers; ++l) {
            Vec a = net.weights[l] * z[l] + net.biases[l];
            z[l + 1] = (l == layers - 1) ? a : a.array().tanh().matrix();
        }

        // d(output)/d(pre-activation), walked backwards layer by layer.
        std::vector<Vec> delta(layers);
        delta[layers - 1] = Vec::Ones(1);
        for (std::size_t l = layers - 1; l > 0; --l) {
            Vec back = net.weights[l].transpose() * delta[l];
            delta[l - 1] =
                back.cwiseProduct((1.0 - z[l].array().square()).matrix());
        }

        int at = 0;
        for (std::size_t l = 0; l < layers; ++l) {
            for (int r = 0; r < net.weights[l].rows(); ++r) {
                for (int c = 0; c < net.weights[l].cols(); ++c) {
                    jac(static_cast<int>(row), at++) = delta[l][r] * z[l][c];
                }
            }
            for (int r = 0; r < net.biases[l].size(); ++r) {
                jac(static_cast<int>(row), at++) = delta[l][r];
            }
        }
    });
    return jac;
}

LmResult lm_train(PolicyNet& net, const Dataset& data, const LmOptions& opts) {
    data.validate();
    net.validate();
    if (!(opts.mu0 > 0.0)) throw ConfigError("train.mu0", "must be > 0");
    if (!(opts.mu_factor > 1.0)) throw ConfigError("train.mu_factor", "must be > 1");

    if (net.feature_offset.size() == 0) {
        const Vec fmin = data.inputs.colwise().minCoeff();
        const Vec fmax = data.inputs.colwise().maxCoeff();
        net.feature_offset = 0.5 * (fmin + fmax);
        net.feature_scale.resize(fmin.size());
        for (int j = 0; j < fmin.size(); ++j) {
            const double span = fmax[j] - fmin[j];
            net.feature_scale[j] = span > 0.0 ? 2.0 / span : 1.0;
        }
    }

    LmResult result;
    Vec r = policy_residuals(net, data);
    double sse = r.squaredNorm();
    result.sse_history.push_back(sse);

    double mu = opts.mu0;
    result.final_mu = mu;
    if (sse <= opts.sse_stop) {
        result.final_sse = sse;
        return result;
    }

    const int p = net.weight_count();
    Mat normal(p, p);
    Vec gradient(p);
    bool model_dirty = true;

    Vec w = net.flatten();
    while (result.iterations < opts.max_iters) {
        if (model_dirty) {
            const Mat jac = policy_jacobian(net, data, opts.exec);
            normal.noalias() = jac.transpose() * jac;
            gradient.noalias() = jac.transpose() * r;
            model_dirty = false;
            if (gradient.lpNorm<Eigen::Infinity>() == 0.0) break;
        }

        Mat damped = normal;
        damped.diagonal().array() += mu;
        const Vec delta = Eigen::LDLT<Mat>(damped).solve(-gradient);

        net.unflatten(w + delta);
        const Vec r_trial = policy_residuals(net, data);
        const double sse_trial = r_trial.squaredNorm();
        ++result.iterations;

        if (sse_trial < sse) {
            w += delta;
            r = r_trial;
            sse = sse_trial;
            mu = std::max(mu / opts.mu_factor, 1e-300);
            result.sse_history.push_back(sse);
            ++result.accepted;
            model_dirty = true;
            if (sse <= opts.sse_stop) break;
        } else {
            net.unflatten(w);
            mu *= opts.mu_factor;
            if (mu > opts.mu_max) break;
        }
    }

    net.unflatten(w);
    result.final_sse = sse;
    result.final_mu = mu;
    return result;
}

void PolicyNet::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("policy.file", "cannot open '" + path + "' for writing");
    out << "racsim-policy-v1\n";
    out << "layers";
    for (int s : layer_sizes) out << ' ' << s;
    out << '\n';
    auto write_vec = [&out](const char* name, const Vec& v) {
        out << name;
        for (int i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
        out << '\n';
    };
    write_vec("feature_offset", feature_offset);
    write_vec("feature_scale", feature_scale);
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out << 'W' << l;
        for (int r = 0; r < weights[l].rows(); ++r) {
            for (int c = 0; c < weights[l].cols(); ++c) out << ' ' << format_double(weights[l](r, c));
        }
        out << '\n';
        write_vec(("b" + std::to_string(l)).c_str(), biases[l]);
    }
}

PolicyNet PolicyNet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("policy.file", "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "racsim-policy-v1") {
        throw ConfigError("policy.file", "unrecognized policy file header");
    }

    auto next_fields = [&in](const std::string& expect) {
        std::string row;
        if (!std::getline(in, row)) {
            throw ConfigError("policy.file", "truncated file, expected " + expect);
        }
        std::istringstream ss(row);
        std::string tag;
        ss >> tag;
        if (tag != expect) {
            throw ConfigError("policy.file", "expected '" + expect + "', got '" + tag + "'");
        }
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        return vals;
    };

    const auto sizes = next_fields("layers");
    std::vector<int> layer_sizes;
    for (double s : sizes) layer_sizes.push_back(static_cast<int>(s));
    PolicyNet net = PolicyNet::make(layer_sizes);

    auto to_vec = [](const std::vector<double>& vals) {
        Vec v(static_cast<int>(vals.size()));
        for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
        return v;
    };
    net.feature_offset = to_vec(next_fields("feature_offset"));
    net.feature_scale = to_vec(next_fields("feature_scale"));

    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const auto wvals = next_fields("W" + std::to_string(l));
        if (static_cast<int>(wvals.size()) != net.weights[l].size()) {
            throw ConfigError("policy.file", "weight block size mismatch");
        }
        int at = 0;
        for (int r = 0; r < net.weights[l].rows(); ++r) {
            for (int c = 0; c < net.weights[l].cols(); ++c) net.weights[l](r, c) = wvals[at++];
        }
        net.biases[l] = to_vec(next_fields("b" + std::to_string(l)));
    }
    net.validate();
    return net;
}

double RampProfile::command(double t) const {
    const double phase = std::min(std::max(t / duration_s, 0.0), 1.0);
    if (shape == "triangle") {
        return max_command * (phase < 0.5 ? 2.0 * phase : 2.0 * (1.0 - phase));
    }
    return max_command * phase;
}

void RampProfile::validate() const {
    if (!(duration_s > 0.0)) throw ConfigError("train.ramp_duration_s", "must be > 0");
    if (!(step_s > 0.0)) throw ConfigError("train.ramp_step_s", "must be > 0");
    if (!(measurement_noise_std >= 0.0)) {
        throw ConfigError("train.measurement_noise_std", "must be >= 0");
    }
    if (feature_horizon_steps < 1) throw ConfigError("train.horizon_steps", "must be >= 1");
    if (shape != "ramp" && shape != "triangle") {
        throw ConfigError("train.ramp_shape", "expected 'ramp' or 'triangle'");
    }
}

Dataset generate_dataset(const PlantStepFn& plant_step, const RampProfile& ramp,
                         std::uint64_t noise_seed) {
    ramp.validate();
    const int n = static_cast<int>(std::llround(ramp.duration_s / ramp.step_s));
    if (n <= 0) throw ConfigError("train.ramp_duration_s", "too short for the step");

    Rng rng(noise_seed);
    auto noisy = [&](double y) {
        return ramp.measurement_noise_std > 0.0 ? y + ramp.measurement_noise_std * rng.gaussian()
                                                : y;
    };

    const double h = ramp.step_s;
    std::vector<double> y_meas(static_cast<std::size_t>(n) + 1);
    std::vector<double> commands(static_cast<std::size_t>(n));
    y_meas[0] = noisy(0.0);
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * h;
        commands[static_cast<std::size_t>(k)] = ramp.command(t);
        y_meas[static_cast<std::size_t>(k) + 1] =
            noisy(plant_step(commands[static_cast<std::size_t>(k)], t, h));
    }

    Dataset data;
    data.inputs.resize(n, 4);
    data.targets.resize(n);
    data.provenance = ramp.id + ":seed" + std::to_string(noise_seed);

    // Inversion pairs: the response a horizon ahead acts as the reference the
    // recorded command realized.
    const int horizon = ramp.feature_horizon_steps;
    for (int k = 0; k < n; ++k) {
        const double y_here = y_meas[static_cast<std::size_t>(k)];
        const double y_ahead = y_meas[static_cast<std::size_t>(std::min(k + horizon, n))];
        data.inputs(k, 0) = y_ahead - y_here;
        data.inputs(k, 1) = y_ahead;
        data.inputs(k, 2) = (y_ahead - y_here) / (static_cast<double>(horizon) * h);
        data.inputs(k, 3) = y_here;
        data.targets[k] = commands[static_cast<std::size_t>(k)];
    }
    data.validate();
    return data;
}

}  // namespace racsim
