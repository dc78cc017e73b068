#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "tempcast/data.hpp"
#include "tempcast/nets.hpp"
#include "tempcast/tape.hpp"

namespace tempcast {

inline constexpr double kDefaultOmega = 2.0 * std::numbers::pi / 365.0;  // rad/day

struct LossWeights {
    double lambda_data = 1.0;
    double lambda_physics = 0.001;
    double omega = kDefaultOmega;  // rad/day
    double dt = 1.0;               // days

    void validate() const;
};

// mean((pred - target)^2)
double mse_loss(std::span<const double> pred, std::span<const double> target);
NodeId mse_loss_node(Tape& tape, NodeId pred, NodeId target);

// Central second difference of the forecast plus the oscillator term:
//   r_i = (y[i+1] - 2 y[i] + y[i-1]) / dt^2 + omega^2 y[i]
// for interior points; the associated loss is mean(r^2).
std::vector<double> physics_residuals(std::span<const double> yhat, const LossWeights& weights);
double physics_loss(std::span<const double> yhat, const LossWeights& weights);

struct PhysicsNodes {
    NodeId residuals;  // [N, len-2]
    NodeId loss;       // scalar
};
PhysicsNodes physics_residuals_node(Tape& tape, NodeId yhat, const LossWeights& weights);

// lambda_data * data + lambda_physics * physics
double total_loss(double data_loss, double physics_loss, const LossWeights& weights);
// physics < 0 means no physics term (plain model); the residual subgraph is
// never built in that case.
NodeId total_loss_node(Tape& tape, NodeId data, NodeId physics, const LossWeights& weights);

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<Tensor> m, v;

    static AdamState init(const std::vector<const Tensor*>& params, double lr = 0.001);
};

// In-place update; throws NumericError on non-finite gradients.
void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);

struct TrainConfig {
    int epochs = 1000;
    double lr = 0.001;
    std::uint64_t seed = 0;
    bool keep_best_val = false;  // additionally keep the best-validation params
};

struct EpochRecord {
    double train_total = 0.0;
    double train_data = 0.0;
    double train_physics = 0.0;
    double val_data = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    ModelParams final_params;
    std::optional<ModelParams> best_val_params;
};

// Full-batch training: one Adam step per epoch over all training windows,
// no early stopping; final-epoch weights returned. Deterministic in
// (arch, dataset, weights, config).
TrainReport train(const ArchConfig& arch, const WindowedDataset& train_windows,
                  const WindowedDataset& val_windows, const LossWeights& weights,
                  const TrainConfig& config);

// CSV columns: epoch,train_total,train_data,train_physics,val_data
void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path);

} // namespace tempcast
