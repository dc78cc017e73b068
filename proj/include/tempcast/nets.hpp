#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tempcast/rng.hpp"
#include "tempcast/tape.hpp"
#include "tempcast/tensor.hpp"

namespace tempcast {

enum class CellKind { rnn, lstm, gru };

int gate_count(CellKind kind);  // 1 / 4 / 3
const char* to_string(CellKind kind);
CellKind cell_kind_from_string(std::string_view name);
// Gate labels in parameter order: rnn {h}, lstm {i,f,g,o}, gru {z,r,n}.
std::vector<const char*> gate_labels(CellKind kind);

struct ArchConfig {
    CellKind cell = CellKind::lstm;
    int input_dim = 1;
    int hidden_dim = 64;
    int num_layers = 2;
    double dropout_rate = 0.1;
    int seq_len = 90;
    int pred_len = 30;

    void validate() const;  // throws std::invalid_argument
};

// One gate's parameters: w_ih [in, H], w_hh [H, H], b [1, H].
struct GateParams {
    Tensor w_ih, w_hh, b;
};

struct LayerParams {
    std::vector<GateParams> gates;
};

// Stacked recurrent encoder plus a linear head mapping the final top-layer
// hidden state to a pred_len forecast vector.
struct ModelParams {
    ArchConfig arch;
    std::vector<LayerParams> layers;
    Tensor w_out;  // [H, pred_len]
    Tensor b_out;  // [1, pred_len]

    // Canonical flat order: per layer, per gate: w_ih, w_hh, b; then head.
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
};

// Weights i.i.d. uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
// Deterministic in the seed.
ModelParams init_params(const ArchConfig& arch, std::uint64_t seed);

std::vector<double> flatten(const std::vector<const Tensor*>& tensors);
std::vector<double> flatten(const std::vector<Tensor*>& tensors);
void unflatten(std::span<const double> values, const std::vector<Tensor*>& tensors);

// Tape-side parameter handles, mirroring ModelParams.
struct GateNodes {
    NodeId w_ih, w_hh, b;
};
struct LayerNodes {
    std::vector<GateNodes> gates;
};
struct ParamNodes {
    std::vector<LayerNodes> layers;
    NodeId w_out = -1, b_out = -1;
    std::vector<NodeId> flat;  // same order as ModelParams::tensors()
};

ParamNodes bind_params(Tape& tape, const ModelParams& params);

// Gradients in ModelParams::tensors() order; zero for parameters the loss
// does not reach.
std::vector<Tensor> collect_param_grads(const Gradients& grads, const ParamNodes& nodes,
                                        const ModelParams& params);

// Single cell steps over [N, dim] batches.
// rnn:  h = tanh(x W_ih + h_prev W_hh + b)
NodeId rnn_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, NodeId h_prev);

struct LstmState {
    NodeId h, c;
};
// lstm: i,f,o = sigmoid(.), g = tanh(.); c = f*c_prev + i*g; h = o*tanh(c)
LstmState lstm_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, LstmState prev);

// gru:  z,r = sigmoid(.); n = tanh(x W_ih + (r*h_prev) W_hh + b);
//       h = (1-z)*h_prev + z*n   (z gates the candidate)
NodeId gru_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, NodeId h_prev);

enum class RunMode { train, eval };

// Runs the stacked encoder over windows [N, seq_len] and returns the head
// output [N, pred_len]. Inverted dropout between stacked layers in train
// mode only; rng is required in train mode.
NodeId encoder_forward(Tape& tape, const ParamNodes& nodes, const ArchConfig& arch,
                       const Tensor& windows, RunMode mode, Rng* rng);

// Untaped batch prediction (eval mode); same kernels as the taped path.
Tensor predict_batch(const ModelParams& params, const Tensor& windows);

// One window (seq_len values) -> pred_len forecast.
std::vector<double> predict_window(const ModelParams& params, std::span<const double> window,
                                   RunMode mode = RunMode::eval, Rng* rng = nullptr);

// Self-describing model container; save/load round-trips bit-exactly.
struct Checkpoint {
    ModelParams params;
    double mu = 0.0;     // standardizer mean, deg C
    double sigma = 1.0;  // standardizer std, deg C
    std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace tempcast
