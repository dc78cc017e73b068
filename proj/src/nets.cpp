#include "tempcast/nets.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tempcast/errors.hpp"

namespace tempcast {

int gate_count(CellKind kind) {
    switch (kind) {
        case CellKind::rnn: return 1;
        case CellKind::lstm: return 4;
        case CellKind::gru: return 3;
    }
    throw std::logic_error("gate_count: bad cell kind");
}

const char* to_string(CellKind kind) {
    switch (kind) {
        case CellKind::rnn: return "rnn";
        case CellKind::lstm: return "lstm";
        case CellKind::gru: return "gru";
    }
    return "?";
}

CellKind cell_kind_from_string(std::string_view name) {
    if (name == "rnn") return CellKind::rnn;
    if (name == "lstm") return CellKind::lstm;
    if (name == "gru") return CellKind::gru;
    throw InputError("unknown cell kind '" + std::string(name) + "' (expected rnn, lstm or gru)");
}

std::vector<const char*> gate_labels(CellKind kind) {
    switch (kind) {
        case CellKind::rnn: return {"h"};
        case CellKind::lstm: return {"i", "f", "g", "o"};
        case CellKind::gru: return {"z", "r", "n"};
    }
    throw std::logic_error("gate_labels: bad cell kind");
}

void ArchConfig::validate() const {
    if (input_dim <= 0) throw std::invalid_argument("ArchConfig: input_dim must be positive");
    if (hidden_dim <= 0) throw std::invalid_argument("ArchConfig: hidden_dim must be positive");
    if (num_layers < 1) throw std::invalid_argument("ArchConfig: num_layers must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("ArchConfig: dropout_rate must be in [0, 1)");
    if (seq_len < 1) throw std::invalid_argument("ArchConfig: seq_len must be >= 1");
    if (pred_len < 1) throw std::invalid_argument("ArchConfig: pred_len must be >= 1");
}

std::vector<Tensor*> ModelParams::tensors() {
    std::vector<Tensor*> out;
    for (auto& layer : layers)
        for (auto& gate : layer.gates) {
            out.push_back(&gate.w_ih);
            out.push_back(&gate.w_hh);
            out.push_back(&gate.b);
        }
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& layer : layers)
        for (const auto& gate : layer.gates) {
            out.push_back(&gate.w_ih);
            out.push_back(&gate.w_hh);
            out.push_back(&gate.b);
        }
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
}

namespace {

Tensor sample_uniform(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::uninitialized({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

} // namespace

ModelParams init_params(const ArchConfig& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    const auto hidden = static_cast<std::size_t>(arch.hidden_dim);
    const int gates = gate_count(arch.cell);

    ModelParams params;
    params.arch = arch;
    params.layers.resize(static_cast<std::size_t>(arch.num_layers));
    for (int l = 0; l < arch.num_layers; ++l) {
        const auto in_dim = static_cast<std::size_t>(l == 0 ? arch.input_dim : arch.hidden_dim);
        auto& layer = params.layers[static_cast<std::size_t>(l)];
        layer.gates.resize(static_cast<std::size_t>(gates));
        for (auto& gate : layer.gates) {
            gate.w_ih = sample_uniform(rng, in_dim, hidden, in_dim);
            gate.w_hh = sample_uniform(rng, hidden, hidden, hidden);
            gate.b = Tensor::zeros({1, hidden});
        }
    }
    params.w_out = sample_uniform(rng, hidden, static_cast<std::size_t>(arch.pred_len), hidden);
    params.b_out = Tensor::zeros({1, static_cast<std::size_t>(arch.pred_len)});
    return params;
}

std::vector<double> flatten(const std::vector<const Tensor*>& tensors) {
    std::vector<double> out;
    for (const Tensor* t : tensors) out.insert(out.end(), t->data().begin(), t->data().end());
    return out;
}

std::vector<double> flatten(const std::vector<Tensor*>& tensors) {
    return flatten(std::vector<const Tensor*>(tensors.begin(), tensors.end()));
}

void unflatten(std::span<const double> values, const std::vector<Tensor*>& tensors) {
    std::size_t offset = 0;
    for (Tensor* t : tensors) {
        if (offset + t->size() > values.size())
            throw std::invalid_argument("unflatten: too few values");
        std::copy(values.begin() + static_cast<std::ptrdiff_t>(offset),
                  values.begin() + static_cast<std::ptrdiff_t>(offset + t->size()), t->data().begin());
        offset += t->size();
    }
    if (offset != values.size()) throw std::invalid_argument("unflatten: too many values");
}

ParamNodes bind_params(Tape& tape, const ModelParams& params) {
    ParamNodes nodes;
    for (const auto& layer : params.layers) {
        LayerNodes ln;
        for (const auto& gate : layer.gates) {
            GateNodes gn;
            gn.w_ih = tape.leaf(gate.w_ih);
            gn.w_hh = tape.leaf(gate.w_hh);
            gn.b = tape.leaf(gate.b);
            ln.gates.push_back(gn);
            nodes.flat.insert(nodes.flat.end(), {gn.w_ih, gn.w_hh, gn.b});
        }
        nodes.layers.push_back(std::move(ln));
    }
    nodes.w_out = tape.leaf(params.w_out);
    nodes.b_out = tape.leaf(params.b_out);
    nodes.flat.push_back(nodes.w_out);
    nodes.flat.push_back(nodes.b_out);
    return nodes;
}

std::vector<Tensor> collect_param_grads(const Gradients& grads, const ParamNodes& nodes,
                                        const ModelParams& params) {
    const auto tensors = params.tensors();
    std::vector<Tensor> out;
    out.reserve(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (grads.contains(nodes.flat[i]))
            out.push_back(grads.at(nodes.flat[i]));
        else
            out.push_back(Tensor::zeros(tensors[i]->shape()));
    }
    return out;
}

namespace {

// x W_ih + h_prev W_hh + b for one gate
NodeId gate_preactivation(Tape& tape, const GateNodes& gate, NodeId x, NodeId h_prev) {
    NodeId s = tape.add(tape.matmul(x, gate.w_ih), tape.matmul(h_prev, gate.w_hh));
    return tape.add(s, gate.b);
}

} // namespace

NodeId rnn_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, NodeId h_prev) {
    return tape.tanh(gate_preactivation(tape, layer.gates[0], x, h_prev));
}

LstmState lstm_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, LstmState prev) {
    NodeId gate_i = tape.sigmoid(gate_preactivation(tape, layer.gates[0], x, prev.h));
    NodeId gate_f = tape.sigmoid(gate_preactivation(tape, layer.gates[1], x, prev.h));
    NodeId gate_g = tape.tanh(gate_preactivation(tape, layer.gates[2], x, prev.h));
    NodeId gate_o = tape.sigmoid(gate_preactivation(tape, layer.gates[3], x, prev.h));
    NodeId c = tape.add(tape.mul(gate_f, prev.c), tape.mul(gate_i, gate_g));
    NodeId h = tape.mul(gate_o, tape.tanh(c));
    return {h, c};
}

NodeId gru_cell_step(Tape& tape, const LayerNodes& layer, NodeId x, NodeId h_prev) {
    NodeId z = tape.sigmoid(gate_preactivation(tape, layer.gates[0], x, h_prev));
    NodeId r = tape.sigmoid(gate_preactivation(tape, layer.gates[1], x, h_prev));
    const GateNodes& cand = layer.gates[2];
    NodeId pre = tape.add(tape.matmul(x, cand.w_ih), tape.matmul(tape.mul(r, h_prev), cand.w_hh));
    NodeId n = tape.tanh(tape.add(pre, cand.b));
    NodeId ones = tape.leaf(Tensor::full(tape.value(h_prev).shape(), 1.0));
    return tape.add(tape.mul(tape.sub(ones, z), h_prev), tape.mul(z, n));
}

NodeId encoder_forward(Tape& tape, const ParamNodes& nodes, const ArchConfig& arch,
                       const Tensor& windows, RunMode mode, Rng* rng) {
    arch.validate();
    if (arch.input_dim != 1)
        throw std::invalid_argument("encoder_forward: only input_dim 1 is supported");
    if (!windows.is_matrix() || windows.shape()[1] != static_cast<std::size_t>(arch.seq_len))
        throw std::invalid_argument("encoder_forward: windows must be [N," + std::to_string(arch.seq_len) +
                                    "], got " + shape_string(windows.shape()));
    if (mode == RunMode::train && rng == nullptr)
        throw std::invalid_argument("encoder_forward: train mode requires an rng");

    const std::size_t n = windows.shape()[0];
    const auto hidden = static_cast<std::size_t>(arch.hidden_dim);
    const auto layers = static_cast<std::size_t>(arch.num_layers);
    const bool use_dropout = mode == RunMode::train && arch.dropout_rate > 0.0;
    const double keep_scale = 1.0 / (1.0 - arch.dropout_rate);

    std::vector<NodeId> h(layers), c(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        h[l] = tape.leaf(Tensor::zeros({n, hidden}));
        if (arch.cell == CellKind::lstm) c[l] = tape.leaf(Tensor::zeros({n, hidden}));
    }

    for (int t = 0; t < arch.seq_len; ++t) {
        Tensor x_col = Tensor::uninitialized({n, 1});
        for (std::size_t r = 0; r < n; ++r) x_col[r] = windows.at(r, static_cast<std::size_t>(t));
        NodeId input = tape.leaf(std::move(x_col));

        for (std::size_t l = 0; l < layers; ++l) {
            if (l > 0 && use_dropout) {
                Tensor mask = Tensor::uninitialized({n, hidden});
                for (std::size_t i = 0; i < mask.size(); ++i)
                    mask[i] = rng->bernoulli(arch.dropout_rate) ? 0.0 : keep_scale;
                input = tape.mul(input, tape.leaf(std::move(mask)));
            }
            switch (arch.cell) {
                case CellKind::rnn:
                    h[l] = rnn_cell_step(tape, nodes.layers[l], input, h[l]);
                    break;
                case CellKind::lstm: {
                    LstmState next = lstm_cell_step(tape, nodes.layers[l], input, {h[l], c[l]});
                    h[l] = next.h;
                    c[l] = next.c;
                    break;
                }
                case CellKind::gru:
                    h[l] = gru_cell_step(tape, nodes.layers[l], input, h[l]);
                    break;
            }
            input = h[l];
        }
    }

    return tape.add(tape.matmul(h[layers - 1], nodes.w_out), nodes.b_out);
}

Tensor predict_batch(const ModelParams& params, const Tensor& windows) {
    Tape tape;
    ParamNodes nodes = bind_params(tape, params);
    NodeId out = encoder_forward(tape, nodes, params.arch, windows, RunMode::eval, nullptr);
    return tape.value(out);
}

std::vector<double> predict_window(const ModelParams& params, std::span<const double> window,
                                   RunMode mode, Rng* rng) {
    if (window.size() != static_cast<std::size_t>(params.arch.seq_len))
        throw std::invalid_argument("predict_window: expected " + std::to_string(params.arch.seq_len) +
                                    " values, got " + std::to_string(window.size()));
    Tensor input({1, window.size()}, std::vector<double>(window.begin(), window.end()));
    Tape tape;
    ParamNodes nodes = bind_params(tape, params);
    NodeId out = encoder_forward(tape, nodes, params.arch, input, mode, rng);
    return tape.value(out).data();
}

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
    return json{{"shape", t.shape()}, {"data", t.data()}};
}

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(), j.at("data").get<std::vector<double>>());
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const ArchConfig& arch = ckpt.params.arch;
    json tensors = json::object();
    const auto labels = gate_labels(arch.cell);
    for (std::size_t l = 0; l < ckpt.params.layers.size(); ++l) {
        const auto& layer = ckpt.params.layers[l];
        for (std::size_t g = 0; g < layer.gates.size(); ++g) {
            const std::string prefix = "layer" + std::to_string(l) + "." + labels[g] + ".";
            tensors[prefix + "w_ih"] = tensor_to_json(layer.gates[g].w_ih);
            tensors[prefix + "w_hh"] = tensor_to_json(layer.gates[g].w_hh);
            tensors[prefix + "b"] = tensor_to_json(layer.gates[g].b);
        }
    }
    tensors["head.w_out"] = tensor_to_json(ckpt.params.w_out);
    tensors["head.b_out"] = tensor_to_json(ckpt.params.b_out);

    json doc{
        {"format", "tempcast-checkpoint-v1"},
        {"arch",
         {{"cell", to_string(arch.cell)},
          {"input_dim", arch.input_dim},
          {"hidden_dim", arch.hidden_dim},
          {"num_layers", arch.num_layers},
          {"dropout_rate", arch.dropout_rate},
          {"seq_len", arch.seq_len},
          {"pred_len", arch.pred_len}}},
        {"standardizer", {{"mu", ckpt.mu}, {"sigma", ckpt.sigma}}},
        {"seed", ckpt.seed},
        {"tensors", tensors},
    };

    std::ofstream out(path);
    if (!out) throw InputError("cannot write checkpoint: " + path.string());
    out << doc.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read checkpoint: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw InputError("bad checkpoint " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("format") != "tempcast-checkpoint-v1")
            throw InputError("bad checkpoint " + path.string() + ": unknown format");
        const json& a = doc.at("arch");
        ArchConfig arch;
        arch.cell = cell_kind_from_string(a.at("cell").get<std::string>());
        arch.input_dim = a.at("input_dim").get<int>();
        arch.hidden_dim = a.at("hidden_dim").get<int>();
        arch.num_layers = a.at("num_layers").get<int>();
        arch.dropout_rate = a.at("dropout_rate").get<double>();
        arch.seq_len = a.at("seq_len").get<int>();
        arch.pred_len = a.at("pred_len").get<int>();
        arch.validate();

        Checkpoint ckpt;
        ckpt.params.arch = arch;
        ckpt.mu = doc.at("standardizer").at("mu").get<double>();
        ckpt.sigma = doc.at("standardizer").at("sigma").get<double>();
        ckpt.seed = doc.at("seed").get<std::uint64_t>();

        const json& tensors = doc.at("tensors");
        const auto labels = gate_labels(arch.cell);
        ckpt.params.layers.resize(static_cast<std::size_t>(arch.num_layers));
        for (int l = 0; l < arch.num_layers; ++l) {
            auto& layer = ckpt.params.layers[static_cast<std::size_t>(l)];
            layer.gates.resize(labels.size());
            for (std::size_t g = 0; g < labels.size(); ++g) {
                const std::string prefix = "layer" + std::to_string(l) + "." + labels[g] + ".";
                layer.gates[g].w_ih = tensor_from_json(tensors.at(prefix + "w_ih"));
                layer.gates[g].w_hh = tensor_from_json(tensors.at(prefix + "w_hh"));
                layer.gates[g].b = tensor_from_json(tensors.at(prefix + "b"));
            }
        }
        ckpt.params.w_out = tensor_from_json(tensors.at("head.w_out"));
        ckpt.params.b_out = tensor_from_json(tensors.at("head.b_out"));
        return ckpt;
    } catch (const json::exception& e) {
        throw InputError("bad checkpoint " + path.string() + ": " + e.what());
    }
}

} // namespace tempcast
