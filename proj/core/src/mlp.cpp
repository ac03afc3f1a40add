#include "windnbm/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "windnbm/error.hpp"
#include "windnbm/rng.hpp"

namespace windnbm {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

}  // namespace

const char* to_string(PresetKind k) {
    return k == PresetKind::single_target ? "single_target" : "multi_target";
}

MlpArchitecture preset_architecture(PresetKind kind) {
    MlpArchitecture arch;
    arch.input_dim = 3;
    arch.dropout_rate = 0.10;
    arch.activation = Activation::relu;
    if (kind == PresetKind::multi_target) {
        arch.hidden = {{4, true}, {19, true}};
        arch.output_dim = 3;
    } else {
        arch.hidden = {{4, true}, {4, true}, {5, true}};
        arch.output_dim = 1;
    }
    return arch;
}

void validate_architecture(const MlpArchitecture& arch) {
    if (arch.input_dim < 1 || arch.output_dim < 1) {
        throw Error(ErrorCategory::domain, "architecture dims must be >= 1");
    }
    for (const auto& h : arch.hidden) {
        if (h.width < 1) {
            throw Error(ErrorCategory::domain, "hidden layer width must be >= 1");
        }
    }
    if (!(arch.dropout_rate >= 0.0 && arch.dropout_rate < 1.0)) {
        throw Error(ErrorCategory::domain, "dropout_rate must be in [0, 1)");
    }
}

MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed) {
    validate_architecture(arch);
    Rng rng(derive_seed(seed, "init"));

    MlpModel model;
    model.architecture = arch;
    model.training_seed = seed;

    int prev = arch.input_dim;
    const auto add_layer = [&](int width, bool bn) {
        DenseLayer layer;
        layer.in_dim = prev;
        layer.out_dim = width;
        layer.weights.resize(static_cast<std::size_t>(width) * prev);
        const double bound = std::sqrt(6.0 / static_cast<double>(prev + width));
        for (double& w : layer.weights) {
            w = bound * (2.0 * rng.next_unit() - 1.0);
        }
        layer.bias.assign(static_cast<std::size_t>(width), 0.0);
        layer.batch_norm = bn;
        if (bn) {
            layer.bn_scale.assign(static_cast<std::size_t>(width), 1.0);
            layer.bn_shift.assign(static_cast<std::size_t>(width), 0.0);
            layer.bn_running_mean.assign(static_cast<std::size_t>(width), 0.0);
            layer.bn_running_var.assign(static_cast<std::size_t>(width), 1.0);
        }
        model.layers.push_back(std::move(layer));
        prev = width;
    };
    for (const auto& h : arch.hidden) add_layer(h.width, h.batch_norm);
    add_layer(arch.output_dim, false);
    return model;
}

namespace {

void validate_model_shapes(const MlpModel& model) {
    const MlpArchitecture& arch = model.architecture;
    validate_architecture(arch);
    if (model.layers.size() != arch.hidden.size() + 1) {
        throw Error(ErrorCategory::domain, "model layer count does not match architecture");
    }
    int prev = arch.input_dim;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const DenseLayer& layer = model.layers[l];
        const bool is_output = l + 1 == model.layers.size();
        const int width = is_output ? arch.output_dim : arch.hidden[l].width;
        if (layer.in_dim != prev || layer.out_dim != width ||
            layer.weights.size() != static_cast<std::size_t>(width) * prev ||
            layer.bias.size() != static_cast<std::size_t>(width)) {
            throw Error(ErrorCategory::domain,
                        "layer " + std::to_string(l) + " shape mismatch");
        }
        if (layer.batch_norm) {
            const auto n = static_cast<std::size_t>(width);
            if (layer.bn_scale.size() != n || layer.bn_shift.size() != n ||
                layer.bn_running_mean.size() != n || layer.bn_running_var.size() != n) {
                throw Error(ErrorCategory::domain,
                            "layer " + std::to_string(l) + " batch-norm state mismatch");
            }
            for (double v : layer.bn_running_var) {
                if (!(v > 0.0)) {
                    throw Error(ErrorCategory::domain, "running variance must stay positive");
                }
            }
        }
        prev = width;
    }
}

// Batch-norm statistics source.
enum class StatsMode {
    batch,   // mean/var of the presented batch
    frozen,  // running statistics (inference and gradient verification)
};

struct LayerCache {
    std::vector<double> z;     // pre-normalization affine output, B x out
    std::vector<double> xhat;  // standardized values, B x out (bn layers)
    std::vector<double> istd;  // per-unit inverse std actually used
    std::vector<double> mu;    // per-unit mean actually used
    std::vector<double> var;   // per-unit batch variance (batch mode only)
    std::vector<double> act;   // post-activation, B x out
    std::vector<double> mask;  // dropout scale per cell, empty when inactive
    std::vector<double> out;   // layer output fed forward, B x out
};

struct ForwardCtx {
    int batch = 0;
    std::vector<double> input;              // B x input_dim
    std::vector<LayerCache> layers;
};

// One shared forward pass for training, inference and gradient paths.
// Dropout is applied only when `dropout_rng` is given (training).
void forward_batch(const MlpModel& model, std::span<const double> features, int batch,
                   StatsMode stats, Rng* dropout_rng, ForwardCtx& ctx) {
    const auto n_layers = model.layers.size();
    const double p = model.architecture.dropout_rate;

    ctx.batch = batch;
    ctx.input.assign(features.begin(), features.end());
    ctx.layers.resize(n_layers);

    const double* in = ctx.input.data();
    int in_dim = model.architecture.input_dim;

    for (std::size_t l = 0; l < n_layers; ++l) {
        const DenseLayer& layer = model.layers[l];
        LayerCache& cache = ctx.layers[l];
        const bool is_output = l + 1 == n_layers;
        const int out_dim = layer.out_dim;
        const auto cells = static_cast<std::size_t>(batch) * out_dim;

        cache.z.resize(cells);
        for (int b = 0; b < batch; ++b) {
            const double* x = in + static_cast<std::size_t>(b) * in_dim;
            double* z = cache.z.data() + static_cast<std::size_t>(b) * out_dim;
            for (int o = 0; o < out_dim; ++o) {
                const double* w = layer.weights.data() + static_cast<std::size_t>(o) * in_dim;
                double acc = layer.bias[static_cast<std::size_t>(o)];
                for (int i = 0; i < in_dim; ++i) acc += w[i] * x[i];
                z[o] = acc;
            }
        }

        const double* post_norm = cache.z.data();
        if (layer.batch_norm) {
            cache.mu.resize(static_cast<std::size_t>(out_dim));
            cache.istd.resize(static_cast<std::size_t>(out_dim));
            cache.xhat.resize(cells);
            if (stats == StatsMode::batch) {
                cache.var.resize(static_cast<std::size_t>(out_dim));
                for (int o = 0; o < out_dim; ++o) {
                    double sum = 0.0;
                    for (int b = 0; b < batch; ++b) sum += cache.z[static_cast<std::size_t>(b) * out_dim + o];
                    const double mu = sum / batch;
                    double ss = 0.0;
                    for (int b = 0; b < batch; ++b) {
                        const double d = cache.z[static_cast<std::size_t>(b) * out_dim + o] - mu;
                        ss += d * d;
                    }
                    const double var = ss / batch;
                    cache.mu[static_cast<std::size_t>(o)] = mu;
                    cache.var[static_cast<std::size_t>(o)] = var;
                    cache.istd[static_cast<std::size_t>(o)] = 1.0 / std::sqrt(var + kBnEpsilon);
                }
            } else {
                for (int o = 0; o < out_dim; ++o) {
                    cache.mu[static_cast<std::size_t>(o)] = layer.bn_running_mean[static_cast<std::size_t>(o)];
                    cache.istd[static_cast<std::size_t>(o)] =
                        1.0 / std::sqrt(layer.bn_running_var[static_cast<std::size_t>(o)] + kBnEpsilon);
                }
            }
            for (int b = 0; b < batch; ++b) {
                for (int o = 0; o < out_dim; ++o) {
                    const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                    cache.xhat[idx] = (cache.z[idx] - cache.mu[static_cast<std::size_t>(o)]) *
                                      cache.istd[static_cast<std::size_t>(o)];
                }
            }
            cache.act.resize(cells);
            for (int b = 0; b < batch; ++b) {
                for (int o = 0; o < out_dim; ++o) {
                    const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                    const double y = layer.bn_scale[static_cast<std::size_t>(o)] * cache.xhat[idx] +
                                     layer.bn_shift[static_cast<std::size_t>(o)];
                    cache.act[idx] = is_output ? y : std::max(0.0, y);
                }
            }
            post_norm = nullptr;  // act already built
        } else {
            cache.act.resize(cells);
            for (std::size_t idx = 0; idx < cells; ++idx) {
                cache.act[idx] = is_output ? post_norm[idx] : std::max(0.0, post_norm[idx]);
            }
        }

        if (!is_output && dropout_rng != nullptr && p > 0.0) {
            cache.mask.resize(cells);
            const double scale = 1.0 / (1.0 - p);
            cache.out.resize(cells);
            for (std::size_t idx = 0; idx < cells; ++idx) {
                const double keep = dropout_rng->next_unit() >= p ? scale : 0.0;
                cache.mask[idx] = keep;
                cache.out[idx] = cache.act[idx] * keep;
            }
        } else {
            cache.mask.clear();
            cache.out = cache.act;
        }

        in = cache.out.data();
        in_dim = out_dim;
    }
}

struct LayerGrads {
    std::vector<double> w;
    std::vector<double> b;
    std::vector<double> gamma;
    std::vector<double> beta;
};

// Mean-squared-error loss averaged over batch and targets; fills the output
// gradient and returns the loss.
double mse_and_output_grad(const ForwardCtx& ctx, std::span<const double> targets,
                           std::vector<double>& d_out) {
    const auto& last = ctx.layers.back();
    const std::size_t cells = last.out.size();
    d_out.resize(cells);
    const double inv = 1.0 / static_cast<double>(cells);
    double loss = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double diff = last.out[i] - targets[i];
        loss += diff * diff;
        d_out[i] = 2.0 * diff * inv;
    }
    return loss * inv;
}

// Backward pass matching forward_batch. `d_out` holds dL/d(output of last
// layer) on entry and is consumed. Gradients are accumulated fresh into
// `grads` (resized and zeroed here).
void backward_batch(const MlpModel& model, const ForwardCtx& ctx, std::vector<double> d_out,
                    StatsMode stats, std::vector<LayerGrads>& grads) {
    const auto n_layers = model.layers.size();
    const int batch = ctx.batch;
    grads.resize(n_layers);

    std::vector<double> d_in;
    for (std::size_t li = n_layers; li-- > 0;) {
        const DenseLayer& layer = model.layers[li];
        const LayerCache& cache = ctx.layers[li];
        const bool is_output = li + 1 == n_layers;
        const int out_dim = layer.out_dim;
        const int in_dim = layer.in_dim;
        LayerGrads& g = grads[li];
        g.w.assign(layer.weights.size(), 0.0);
        g.b.assign(layer.bias.size(), 0.0);

        // Through dropout and the activation.
        std::vector<double>& dz = d_out;
        if (!is_output) {
            for (int b = 0; b < batch; ++b) {
                for (int o = 0; o < out_dim; ++o) {
                    const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                    double d = dz[idx];
                    if (!cache.mask.empty()) d *= cache.mask[idx];
                    if (cache.act[idx] <= 0.0) d = 0.0;  // rectifier gate
                    dz[idx] = d;
                }
            }
        }

        // Through batch norm: dz currently holds dL/dy with y the scaled
        // shifted value.
        if (layer.batch_norm) {
            g.gamma.assign(static_cast<std::size_t>(out_dim), 0.0);
            g.beta.assign(static_cast<std::size_t>(out_dim), 0.0);
            if (stats == StatsMode::batch) {
                for (int o = 0; o < out_dim; ++o) {
                    double sum_dxhat = 0.0;
                    double sum_dxhat_xhat = 0.0;
                    const double gamma = layer.bn_scale[static_cast<std::size_t>(o)];
                    for (int b = 0; b < batch; ++b) {
                        const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                        const double dy = dz[idx];
                        g.gamma[static_cast<std::size_t>(o)] += dy * cache.xhat[idx];
                        g.beta[static_cast<std::size_t>(o)] += dy;
                        const double dxhat = dy * gamma;
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * cache.xhat[idx];
                    }
                    const double istd = cache.istd[static_cast<std::size_t>(o)];
                    const double inv_b = 1.0 / static_cast<double>(batch);
                    for (int b = 0; b < batch; ++b) {
                        const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                        const double dxhat = dz[idx] * gamma;
                        dz[idx] = istd * (dxhat - inv_b * (sum_dxhat +
                                                           cache.xhat[idx] * sum_dxhat_xhat));
                    }
                }
            } else {
                // Frozen statistics: the standardization is a constant
                // affine map.
                for (int o = 0; o < out_dim; ++o) {
                    const double gamma = layer.bn_scale[static_cast<std::size_t>(o)];
                    const double istd = cache.istd[static_cast<std::size_t>(o)];
                    for (int b = 0; b < batch; ++b) {
                        const std::size_t idx = static_cast<std::size_t>(b) * out_dim + o;
                        const double dy = dz[idx];
                        g.gamma[static_cast<std::size_t>(o)] += dy * cache.xhat[idx];
                        g.beta[static_cast<std::size_t>(o)] += dy;
                        dz[idx] = dy * gamma * istd;
                    }
                }
            }
        }

        // Through the affine map.
        const double* in = li == 0 ? ctx.input.data() : ctx.layers[li - 1].out.data();
        for (int b = 0; b < batch; ++b) {
            const double* x = in + static_cast<std::size_t>(b) * in_dim;
            const double* dzb = dz.data() + static_cast<std::size_t>(b) * out_dim;
            for (int o = 0; o < out_dim; ++o) {
                const double d = dzb[o];
                g.b[static_cast<std::size_t>(o)] += d;
                double* gw = g.w.data() + static_cast<std::size_t>(o) * in_dim;
                for (int i = 0; i < in_dim; ++i) gw[i] += d * x[i];
            }
        }
        if (li > 0) {
            d_in.assign(static_cast<std::size_t>(batch) * in_dim, 0.0);
            for (int b = 0; b < batch; ++b) {
                const double* dzb = dz.data() + static_cast<std::size_t>(b) * out_dim;
                double* dib = d_in.data() + static_cast<std::size_t>(b) * in_dim;
                for (int o = 0; o < out_dim; ++o) {
                    const double d = dzb[o];
                    const double* w = layer.weights.data() + static_cast<std::size_t>(o) * in_dim;
                    for (int i = 0; i < in_dim; ++i) dib[i] += d * w[i];
                }
            }
            d_out = std::move(d_in);
        }
    }
}

}  // namespace

std::vector<double> forward(const MlpModel& model, std::span<const double> x, ForwardMode mode) {
    validate_model_shapes(model);
    if (static_cast<int>(x.size()) != model.architecture.input_dim) {
        throw Error(ErrorCategory::domain,
                    "input dimension mismatch: expected " +
                        std::to_string(model.architecture.input_dim) + ", got " +
                        std::to_string(x.size()));
    }
    ForwardCtx ctx;
    const StatsMode stats =
        mode == ForwardMode::inference ? StatsMode::frozen : StatsMode::batch;
    forward_batch(model, x, 1, stats, nullptr, ctx);
    return ctx.layers.back().out;
}

RegressionDataset make_dataset(const ScadaSeries& normalized, int target_dim) {
    if (!normalized.normalized) {
        throw Error(ErrorCategory::state, "make_dataset requires a normalized series");
    }
    if (target_dim != 1 && target_dim != 3) {
        throw Error(ErrorCategory::domain, "target_dim must be 1 or 3");
    }
    RegressionDataset ds;
    ds.target_dim = target_dim;
    ds.features.reserve(normalized.size());
    ds.targets.reserve(normalized.size() * static_cast<std::size_t>(target_dim));
    for (const ScadaRecord& r : normalized.records) {
        ds.features.push_back({r.wind_speed, r.wind_dir, r.air_temp});
        ds.targets.push_back(r.gear_temp);
        if (target_dim == 3) {
            ds.targets.push_back(r.oil_temp);
            ds.targets.push_back(r.tr_temp);
        }
    }
    return ds;
}

namespace {

void validate_train_inputs(const RegressionDataset& dataset, const MlpArchitecture& arch,
                           const TrainConfig& cfg) {
    validate_architecture(arch);
    if (arch.input_dim != 3) {
        throw Error(ErrorCategory::domain, "training datasets carry 3 features per sample");
    }
    if (dataset.size() == 0) {
        throw Error(ErrorCategory::domain, "empty dataset");
    }
    if (dataset.target_dim != arch.output_dim) {
        throw Error(ErrorCategory::domain,
                    "dataset target_dim " + std::to_string(dataset.target_dim) +
                        " does not match output_dim " + std::to_string(arch.output_dim));
    }
    if (dataset.targets.size() != dataset.size() * static_cast<std::size_t>(dataset.target_dim)) {
        throw Error(ErrorCategory::domain, "dataset feature/target length mismatch");
    }
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw Error(ErrorCategory::config, "epochs and batch_size must be >= 1");
    }
    if (cfg.learning_rate < 0.0) {
        throw Error(ErrorCategory::config, "learning_rate must be >= 0");
    }
    if (dataset.size() < static_cast<std::size_t>(cfg.batch_size)) {
        throw Error(ErrorCategory::domain, "dataset smaller than one batch");
    }
    if (!(cfg.bn_momentum >= 0.0 && cfg.bn_momentum < 1.0)) {
        throw Error(ErrorCategory::config, "bn_momentum must be in [0, 1)");
    }
}

struct AdamTensor {
    std::vector<double> m;
    std::vector<double> v;
};

struct AdamState {
    std::vector<AdamTensor> tensors;  // aligned with trainable tensor order
    long step = 0;
};

void adam_update(std::span<double> theta, std::span<const double> grad, AdamTensor& state,
                 double lr, long step) {
    const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEpsilon);
    }
}

}  // namespace

std::pair<MlpModel, TrainReport> train(const RegressionDataset& dataset,
                                       const MlpArchitecture& arch, const TrainConfig& cfg) {
    validate_train_inputs(dataset, arch, cfg);

    MlpModel model = init_model(arch, cfg.seed);
    Rng rng(derive_seed(cfg.seed, "train"));

    AdamState adam;
    adam.tensors.reserve(model.layers.size() * 4);
    for (const DenseLayer& layer : model.layers) {
        adam.tensors.push_back({std::vector<double>(layer.weights.size(), 0.0),
                                std::vector<double>(layer.weights.size(), 0.0)});
        adam.tensors.push_back({std::vector<double>(layer.bias.size(), 0.0),
                                std::vector<double>(layer.bias.size(), 0.0)});
        if (layer.batch_norm) {
            adam.tensors.push_back({std::vector<double>(layer.bn_scale.size(), 0.0),
                                    std::vector<double>(layer.bn_scale.size(), 0.0)});
            adam.tensors.push_back({std::vector<double>(layer.bn_shift.size(), 0.0),
                                    std::vector<double>(layer.bn_shift.size(), 0.0)});
        }
    }

    const std::size_t n = dataset.size();
    const int target_dim = dataset.target_dim;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> batch_features;
    std::vector<double> batch_targets;
    ForwardCtx ctx;
    std::vector<double> d_out;
    std::vector<LayerGrads> grads;

    TrainReport report;
    double best_loss = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());

        double epoch_loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch_size)) {
            const int batch = static_cast<int>(
                std::min(static_cast<std::size_t>(cfg.batch_size), n - begin));

            batch_features.resize(static_cast<std::size_t>(batch) * 3);
            batch_targets.resize(static_cast<std::size_t>(batch) * target_dim);
            for (int b = 0; b < batch; ++b) {
                const std::size_t src = order[begin + static_cast<std::size_t>(b)];
                std::copy_n(dataset.features[src].data(), 3,
                            batch_features.data() + static_cast<std::size_t>(b) * 3);
                std::copy_n(dataset.targets.data() + src * static_cast<std::size_t>(target_dim),
                            target_dim,
                            batch_targets.data() + static_cast<std::size_t>(b) * target_dim);
            }

            forward_batch(model, batch_features, batch, StatsMode::batch,
                          arch.dropout_rate > 0.0 ? &rng : nullptr, ctx);

            // Running statistics follow the batch statistics before the
            // parameter step, exponential moving average with bn_momentum.
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& layer = model.layers[l];
                if (!layer.batch_norm) continue;
                const LayerCache& cache = ctx.layers[l];
                for (int o = 0; o < layer.out_dim; ++o) {
                    const auto oi = static_cast<std::size_t>(o);
                    layer.bn_running_mean[oi] = cfg.bn_momentum * layer.bn_running_mean[oi] +
                                                (1.0 - cfg.bn_momentum) * cache.mu[oi];
                    layer.bn_running_var[oi] = cfg.bn_momentum * layer.bn_running_var[oi] +
                                               (1.0 - cfg.bn_momentum) * cache.var[oi];
                }
            }

            const double batch_loss = mse_and_output_grad(ctx, batch_targets, d_out);
            if (!std::isfinite(batch_loss)) {
                throw Error(ErrorCategory::numeric,
                            "non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss_sum += batch_loss * batch;

            backward_batch(model, ctx, std::move(d_out), StatsMode::batch, grads);

            ++adam.step;
            std::size_t tensor_idx = 0;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& layer = model.layers[l];
                adam_update(layer.weights, grads[l].w, adam.tensors[tensor_idx++],
                            cfg.learning_rate, adam.step);
                adam_update(layer.bias, grads[l].b, adam.tensors[tensor_idx++],
                            cfg.learning_rate, adam.step);
                if (layer.batch_norm) {
                    adam_update(layer.bn_scale, grads[l].gamma, adam.tensors[tensor_idx++],
                                cfg.learning_rate, adam.step);
                    adam_update(layer.bn_shift, grads[l].beta, adam.tensors[tensor_idx++],
                                cfg.learning_rate, adam.step);
                }
            }
        }

        const double epoch_loss = epoch_loss_sum / static_cast<double>(n);
        report.epoch_loss.push_back(epoch_loss);
        report.epochs_run = epoch + 1;

        if (cfg.early_stopping_patience > 0) {
            if (epoch_loss < best_loss) {
                best_loss = epoch_loss;
                stale_epochs = 0;
            } else if (++stale_epochs >= cfg.early_stopping_patience) {
                break;
            }
        }
    }
    report.final_loss = report.epoch_loss.back();
    return {std::move(model), std::move(report)};
}

std::vector<double> predict_series(const MlpModel& model,
                                   std::span<const std::array<double, 3>> features) {
    validate_model_shapes(model);
    if (model.architecture.input_dim != 3) {
        throw Error(ErrorCategory::domain, "predict_series expects a 3-input model");
    }
    const int out_dim = model.architecture.output_dim;
    std::vector<double> out;
    out.reserve(features.size() * static_cast<std::size_t>(out_dim));
    ForwardCtx ctx;
    for (const auto& f : features) {
        forward_batch(model, std::span<const double>(f.data(), 3), 1, StatsMode::frozen, nullptr,
                      ctx);
        const auto& y = ctx.layers.back().out;
        out.insert(out.end(), y.begin(), y.end());
    }
    return out;
}

ErrorMetrics evaluate_error(const MlpModel& model, const RegressionDataset& dataset) {
    if (dataset.size() == 0) {
        throw Error(ErrorCategory::domain, "evaluate_error on empty dataset");
    }
    if (dataset.target_dim != model.architecture.output_dim) {
        throw Error(ErrorCategory::domain, "dataset target_dim does not match model");
    }
    const auto predictions = predict_series(model, dataset.features);
    const int k = dataset.target_dim;
    ErrorMetrics metrics;
    metrics.rmse.assign(static_cast<std::size_t>(k), 0.0);
    metrics.mae.assign(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (int t = 0; t < k; ++t) {
            const double diff = predictions[i * static_cast<std::size_t>(k) + t] -
                                dataset.targets[i * static_cast<std::size_t>(k) + t];
            metrics.rmse[static_cast<std::size_t>(t)] += diff * diff;
            metrics.mae[static_cast<std::size_t>(t)] += std::fabs(diff);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (int t = 0; t < k; ++t) {
        metrics.rmse[static_cast<std::size_t>(t)] =
            std::sqrt(metrics.rmse[static_cast<std::size_t>(t)] * inv_n);
        metrics.mae[static_cast<std::size_t>(t)] *= inv_n;
    }
    return metrics;
}

namespace detail {

std::vector<double*> trainable_parameters(MlpModel& model) {
    std::vector<double*> params;
    for (DenseLayer& layer : model.layers) {
        for (double& w : layer.weights) params.push_back(&w);
        for (double& b : layer.bias) params.push_back(&b);
        if (layer.batch_norm) {
            for (double& g : layer.bn_scale) params.push_back(&g);
            for (double& s : layer.bn_shift) params.push_back(&s);
        }
    }
    return params;
}

double batch_stats_loss(const MlpModel& model, std::span<const double> features,
                        std::span<const double> targets, int batch) {
    ForwardCtx ctx;
    forward_batch(model, features, batch, StatsMode::batch, nullptr, ctx);
    std::vector<double> d_out;
    return mse_and_output_grad(ctx, targets, d_out);
}

std::vector<double> batch_stats_gradients(const MlpModel& model,
                                          std::span<const double> features,
                                          std::span<const double> targets, int batch) {
    ForwardCtx ctx;
    forward_batch(model, features, batch, StatsMode::batch, nullptr, ctx);
    std::vector<double> d_out;
    mse_and_output_grad(ctx, targets, d_out);
    std::vector<LayerGrads> grads;
    backward_batch(model, ctx, std::move(d_out), StatsMode::batch, grads);

    std::vector<double> flat;
    for (std::size_t l = 0; l < grads.size(); ++l) {
        flat.insert(flat.end(), grads[l].w.begin(), grads[l].w.end());
        flat.insert(flat.end(), grads[l].b.begin(), grads[l].b.end());
        flat.insert(flat.end(), grads[l].gamma.begin(), grads[l].gamma.end());
        flat.insert(flat.end(), grads[l].beta.begin(), grads[l].beta.end());
    }
    return flat;
}

}  // namespace detail

double gradient_check(const MlpModel& model, std::span<const double> x,
                      std::span<const double> y, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw Error(ErrorCategory::domain, "epsilon must be > 0");
    }
    validate_model_shapes(model);
    if (static_cast<int>(x.size()) != model.architecture.input_dim ||
        static_cast<int>(y.size()) != model.architecture.output_dim) {
        throw Error(ErrorCategory::domain, "gradient_check input/target dimension mismatch");
    }

    // Analytic gradients with frozen statistics.
    ForwardCtx ctx;
    forward_batch(model, x, 1, StatsMode::frozen, nullptr, ctx);
    std::vector<double> d_out;
    mse_and_output_grad(ctx, y, d_out);
    std::vector<LayerGrads> grads;
    backward_batch(model, ctx, std::move(d_out), StatsMode::frozen, grads);

    std::vector<double> analytic;
    for (const LayerGrads& g : grads) {
        analytic.insert(analytic.end(), g.w.begin(), g.w.end());
        analytic.insert(analytic.end(), g.b.begin(), g.b.end());
        analytic.insert(analytic.end(), g.gamma.begin(), g.gamma.end());
        analytic.insert(analytic.end(), g.beta.begin(), g.beta.end());
    }

    MlpModel probe = model;
    const auto params = detail::trainable_parameters(probe);
    const auto frozen_loss = [&]() {
        forward_batch(probe, x, 1, StatsMode::frozen, nullptr, ctx);
        std::vector<double> tmp;
        return mse_and_output_grad(ctx, y, tmp);
    };

    double max_dev = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + epsilon;
        const double up = frozen_loss();
        *params[i] = saved - epsilon;
        const double down = frozen_loss();
        *params[i] = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::fabs(analytic[i]) + std::fabs(numeric);
        if (denom > 0.0) {
            max_dev = std::max(max_dev, std::fabs(analytic[i] - numeric) / denom);
        }
    }
    return max_dev;
}

namespace {

constexpr char kModelMagic[8] = {'W', 'N', 'B', 'M', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_tensor(std::ostream& out, const std::vector<double>& t) {
    for (double v : t) put_f64(out, v);
}

void get_tensor(std::istream& in, std::vector<double>& t, std::size_t n) {
    t.resize(n);
    for (double& v : t) v = get_f64(in);
}

}  // namespace

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    validate_model_shapes(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out.write(kModelMagic, sizeof(kModelMagic));
    put_u32(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(model.architecture.activation));
    put_u32(out, static_cast<std::uint32_t>(model.architecture.input_dim));
    put_u32(out, static_cast<std::uint32_t>(model.architecture.output_dim));
    put_u32(out, static_cast<std::uint32_t>(model.architecture.hidden.size()));
    put_f64(out, model.architecture.dropout_rate);
    for (const auto& h : model.architecture.hidden) {
        put_u32(out, static_cast<std::uint32_t>(h.width));
        put_u32(out, h.batch_norm ? 1 : 0);
    }
    put_u64(out, model.training_seed);
    for (const DenseLayer& layer : model.layers) {
        put_tensor(out, layer.weights);
        put_tensor(out, layer.bias);
        if (layer.batch_norm) {
            put_tensor(out, layer.bn_scale);
            put_tensor(out, layer.bn_shift);
            put_tensor(out, layer.bn_running_mean);
            put_tensor(out, layer.bn_running_var);
        }
    }
    if (!out) {
        throw Error(ErrorCategory::io, "write failed for " + path.string());
    }
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw Error(ErrorCategory::parse, path.string() + ": not a model file");
    }
    if (get_u32(in) != kModelVersion) {
        throw Error(ErrorCategory::parse, path.string() + ": unsupported model version");
    }

    MlpModel model;
    model.architecture.activation = static_cast<Activation>(get_u32(in));
    model.architecture.input_dim = static_cast<int>(get_u32(in));
    model.architecture.output_dim = static_cast<int>(get_u32(in));
    const std::uint32_t n_hidden = get_u32(in);
    if (n_hidden > 64) {
        throw Error(ErrorCategory::parse, path.string() + ": implausible layer count");
    }
    model.architecture.dropout_rate = get_f64(in);
    model.architecture.hidden.resize(n_hidden);
    for (auto& h : model.architecture.hidden) {
        h.width = static_cast<int>(get_u32(in));
        h.batch_norm = get_u32(in) != 0;
    }
    model.training_seed = get_u64(in);

    int prev = model.architecture.input_dim;
    for (std::size_t l = 0; l <= n_hidden; ++l) {
        const bool is_output = l == n_hidden;
        DenseLayer layer;
        layer.in_dim = prev;
        layer.out_dim = is_output ? model.architecture.output_dim
                                  : model.architecture.hidden[l].width;
        layer.batch_norm = !is_output && model.architecture.hidden[l].batch_norm;
        const auto n = static_cast<std::size_t>(layer.out_dim);
        get_tensor(in, layer.weights, n * static_cast<std::size_t>(layer.in_dim));
        get_tensor(in, layer.bias, n);
        if (layer.batch_norm) {
            get_tensor(in, layer.bn_scale, n);
            get_tensor(in, layer.bn_shift, n);
            get_tensor(in, layer.bn_running_mean, n);
            get_tensor(in, layer.bn_running_var, n);
        }
        prev = layer.out_dim;
        model.layers.push_back(std::move(layer));
    }
    if (!in) {
        throw Error(ErrorCategory::parse, path.string() + ": truncated model file");
    }
    validate_model_shapes(model);
    return model;
}

}  // namespace windnbm
