#ifndef WINDNBM_MLP_HPP
#define WINDNBM_MLP_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "windnbm/scada.hpp"

namespace windnbm {

enum class Activation {
    relu,
};

struct HiddenLayerSpec {
    int width = 1;
    bool batch_norm = true;
};

/// Feedforward architecture. Hidden layers apply affine -> batch norm (when
/// enabled) -> activation -> dropout; the output layer is plain affine.
struct MlpArchitecture {
    int input_dim = 3;
    std::vector<HiddenLayerSpec> hidden;
    int output_dim = 1;
    double dropout_rate = 0.1;
    Activation activation = Activation::relu;
};

enum class PresetKind {
    single_target,  // hidden (4, 4, 5), one output
    multi_target,   // hidden (4, 19), three outputs
};

const char* to_string(PresetKind k);

MlpArchitecture preset_architecture(PresetKind kind);
void validate_architecture(const MlpArchitecture& arch);

/// One dense layer. Weights are row-major out_dim x in_dim. Batch-norm
/// layers carry learned scale/shift plus running statistics used at
/// inference; running_var entries stay strictly positive.
struct DenseLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    bool batch_norm = false;
    std::vector<double> bn_scale;
    std::vector<double> bn_shift;
    std::vector<double> bn_running_mean;
    std::vector<double> bn_running_var;
};

struct MlpModel {
    MlpArchitecture architecture;
    std::vector<DenseLayer> layers;  // hidden layers then the output layer
    std::uint64_t training_seed = 0;
};

/// Weights drawn uniformly from +-sqrt(6 / (fan_in + fan_out)); biases zero;
/// batch-norm scale 1, shift 0, running stats (0, 1). Deterministic per seed.
MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed);

enum class ForwardMode {
    /// Batch-norm layers standardize with the statistics of the presented
    /// batch (degenerate but well-defined for a single sample). No dropout:
    /// dropout masks exist only inside the training loop.
    train_with_batch_stats,
    /// Batch-norm layers use running statistics; fully deterministic.
    inference,
};

std::vector<double> forward(const MlpModel& model, std::span<const double> x,
                            ForwardMode mode = ForwardMode::inference);

/// Feature/target table in normalized units. Targets are flat row-major
/// n x target_dim, ordered (gear [, oil, tr]).
struct RegressionDataset {
    std::vector<std::array<double, 3>> features;
    std::vector<double> targets;
    int target_dim = 1;

    std::size_t size() const { return features.size(); }
};

/// Builds (wind_speed, wind_dir, air_temp) -> temperature targets from a
/// normalized series. target_dim 1 keeps gear only; 3 adds oil and tr.
RegressionDataset make_dataset(const ScadaSeries& normalized, int target_dim);

enum class Optimizer {
    adam,
};

/// Adam: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2, bias-corrected,
/// theta <- theta - lr * m^ / (sqrt(v^) + 1e-8), with b1 = 0.9, b2 = 0.999.
struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 0;
    int early_stopping_patience = 0;  // 0 disables
    double bn_momentum = 0.9;         // running <- m * running + (1-m) * batch
};

struct TrainReport {
    std::vector<double> epoch_loss;  // mean squared error per epoch
    double final_loss = 0.0;
    int epochs_run = 0;
};

/// Minimizes mean squared error averaged over targets. Single-threaded and
/// deterministic: identical (dataset, arch, cfg) reproduce bit-identical
/// parameters. Epoch order is a seeded shuffle; dropout masks come from the
/// same stream.
std::pair<MlpModel, TrainReport> train(const RegressionDataset& dataset,
                                       const MlpArchitecture& arch, const TrainConfig& cfg);

/// Inference-mode predictions, flat row-major n x output_dim.
std::vector<double> predict_series(const MlpModel& model,
                                   std::span<const std::array<double, 3>> features);

struct ErrorMetrics {
    std::vector<double> rmse;  // per target, normalized units
    std::vector<double> mae;
};

ErrorMetrics evaluate_error(const MlpModel& model, const RegressionDataset& dataset);

/// Maximum relative deviation between the analytic gradient and central
/// finite differences of the per-sample loss, taken over every trainable
/// parameter. Batch norm is frozen at the running statistics and dropout is
/// off, so the loss is deterministic. The deviation for one parameter is
/// |ga - gn| / (|ga| + |gn|), defined as 0 when both vanish.
double gradient_check(const MlpModel& model, std::span<const double> x,
                      std::span<const double> y, double epsilon);

// Binary model file, layout documented in docs/model_format.md. Round trips
// reproduce predictions bit-exactly.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

namespace detail {

/// Pointers to every trainable parameter in serialization order (per layer:
/// weights, bias, then batch-norm scale and shift when present).
std::vector<double*> trainable_parameters(MlpModel& model);

/// Training-path loss and gradients with batch statistics and no dropout.
/// The gradient vector follows trainable_parameters order. Exposed so tests
/// can difference the exact loss the optimizer sees.
double batch_stats_loss(const MlpModel& model, std::span<const double> features,
                        std::span<const double> targets, int batch);
std::vector<double> batch_stats_gradients(const MlpModel& model,
                                          std::span<const double> features,
                                          std::span<const double> targets, int batch);

}  // namespace detail

}  // namespace windnbm

#endif
