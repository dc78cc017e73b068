#include "tempcast/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "tempcast/errors.hpp"

namespace tempcast {

void LossWeights::validate() const {
    if (lambda_data < 0.0 || lambda_physics < 0.0)
        throw std::invalid_argument("LossWeights: loss weights must be >= 0");
    if (omega <= 0.0) throw std::invalid_argument("LossWeights: omega must be positive");
    if (dt <= 0.0) throw std::invalid_argument("LossWeights: dt must be positive");
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty()) throw std::invalid_argument("mse_loss: empty input");
    if (pred.size() != target.size())
        throw std::invalid_argument("mse_loss: length mismatch " + std::to_string(pred.size()) +
                                    " vs " + std::to_string(target.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

NodeId mse_loss_node(Tape& tape, NodeId pred, NodeId target) {
    return tape.mean(tape.square(tape.sub(pred, target)));
}

std::vector<double> physics_residuals(std::span<const double> yhat, const LossWeights& weights) {
    weights.validate();
    if (yhat.size() < 3)
        throw std::invalid_argument("physics_residuals: need at least 3 values, got " +
                                    std::to_string(yhat.size()));
    const double inv_dt2 = 1.0 / (weights.dt * weights.dt);
    const double omega2 = weights.omega * weights.omega;
    std::vector<double> r(yhat.size() - 2);
    for (std::size_t i = 1; i + 1 < yhat.size(); ++i)
        r[i - 1] = (yhat[i + 1] - 2.0 * yhat[i] + yhat[i - 1]) * inv_dt2 + omega2 * yhat[i];
    return r;
}

double physics_loss(std::span<const double> yhat, const LossWeights& weights) {
    const std::vector<double> r = physics_residuals(yhat, weights);
    double sum = 0.0;
    for (double v : r) sum += v * v;
    return sum / static_cast<double>(r.size());
}

PhysicsNodes physics_residuals_node(Tape& tape, NodeId yhat, const LossWeights& weights) {
    weights.validate();
    const Tensor& y = tape.value(yhat);
    const std::size_t len = y.is_matrix() ? y.shape()[1] : y.shape()[0];
    if (len < 3)
        throw std::invalid_argument("physics_residuals: need at least 3 values, got " +
                                    std::to_string(len));
    const double inv_dt2 = 1.0 / (weights.dt * weights.dt);
    const double omega2 = weights.omega * weights.omega;

    NodeId ahead = tape.slice(yhat, 2, len);
    NodeId mid = tape.slice(yhat, 1, len - 1);
    NodeId behind = tape.slice(yhat, 0, len - 2);
    NodeId second_diff = tape.add(tape.sub(ahead, tape.scale(mid, 2.0)), behind);
    NodeId residuals = tape.add(tape.scale(second_diff, inv_dt2), tape.scale(mid, omega2));
    return {residuals, tape.mean(tape.square(residuals))};
}

double total_loss(double data_loss, double physics_loss, const LossWeights& weights) {
    weights.validate();
    if (!std::isfinite(data_loss) || !std::isfinite(physics_loss))
        throw NumericError("total_loss: non-finite input");
    if (data_loss < 0.0 || physics_loss < 0.0)
        throw std::invalid_argument("total_loss: losses must be >= 0");
    return weights.lambda_data * data_loss + weights.lambda_physics * physics_loss;
}

NodeId total_loss_node(Tape& tape, NodeId data, NodeId physics, const LossWeights& weights) {
    weights.validate();
    NodeId total = tape.scale(data, weights.lambda_data);
    if (physics >= 0) total = tape.add(total, tape.scale(physics, weights.lambda_physics));
    return total;
}

AdamState AdamState::init(const std::vector<const Tensor*>& params, double lr) {
    AdamState state;
    state.lr = lr;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Tensor* p : params) {
        state.m.push_back(Tensor::zeros(p->shape()));
        state.v.push_back(Tensor::zeros(p->shape()));
    }
    return state;
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
    if (params.size() != state.m.size() || params.size() != grads.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& theta = *params[i];
        const Tensor& g = grads[i];
        if (!theta.same_shape(g))
            throw std::invalid_argument("adam_step: gradient shape " + shape_string(g.shape()) +
                                        " does not match parameter " + shape_string(theta.shape()));
        if (!g.all_finite())
            throw NumericError("adam_step: non-finite gradient in parameter tensor " + std::to_string(i));
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            theta[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

namespace {

void check_dataset(const WindowedDataset& ds, const ArchConfig& arch, const char* name) {
    if (ds.count() == 0) throw InputError(std::string("train: empty ") + name + " dataset");
    if (ds.inputs.shape()[1] != static_cast<std::size_t>(arch.seq_len) ||
        ds.targets.shape()[1] != static_cast<std::size_t>(arch.pred_len))
        throw InputError(std::string("train: ") + name + " windows are " +
                         shape_string(ds.inputs.shape()) + "/" + shape_string(ds.targets.shape()) +
                         ", expected widths " + std::to_string(arch.seq_len) + "/" +
                         std::to_string(arch.pred_len));
}

double validation_data_loss(const ModelParams& params, const WindowedDataset& val) {
    const Tensor pred = predict_batch(params, val.inputs);
    return mse_loss(pred.data(), val.targets.data());
}

} // namespace

TrainReport train(const ArchConfig& arch, const WindowedDataset& train_windows,
                  const WindowedDataset& val_windows, const LossWeights& weights,
                  const TrainConfig& config) {
    arch.validate();
    weights.validate();
    if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    check_dataset(train_windows, arch, "training");
    check_dataset(val_windows, arch, "validation");

    ModelParams params = init_params(arch, config.seed);
    const std::vector<Tensor*> param_ptrs = params.tensors();
    AdamState adam = AdamState::init(std::vector<const Tensor*>(param_ptrs.begin(), param_ptrs.end()),
                                     config.lr);
    // Separate stream from init_params so dropout draws do not depend on
    // the parameter count.
    Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainReport report;
    report.epochs.reserve(static_cast<std::size_t>(config.epochs));
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Tape tape;
        ParamNodes nodes = bind_params(tape, params);
        NodeId yhat = encoder_forward(tape, nodes, arch, train_windows.inputs, RunMode::train,
                                      &dropout_rng);
        NodeId target = tape.leaf(train_windows.targets);
        NodeId data_node = mse_loss_node(tape, yhat, target);
        NodeId physics_node = -1;
        if (weights.lambda_physics != 0.0)
            physics_node = physics_residuals_node(tape, yhat, weights).loss;
        NodeId total_node = total_loss_node(tape, data_node, physics_node, weights);

        EpochRecord rec;
        rec.train_total = tape.value(total_node)[0];
        rec.train_data = tape.value(data_node)[0];
        rec.train_physics = physics_node >= 0 ? tape.value(physics_node)[0] : 0.0;
        if (!std::isfinite(rec.train_total))
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               ": total loss is not finite (data " + std::to_string(rec.train_data) +
                               ", physics " + std::to_string(rec.train_physics) + ")");

        Gradients grads = tape.backward(total_node);
        std::vector<Tensor> param_grads = collect_param_grads(grads, nodes, params);
        try {
            adam_step(adam, param_ptrs, param_grads);
        } catch (const NumericError& e) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }

        rec.val_data = validation_data_loss(params, val_windows);
        report.epochs.push_back(rec);

        if (config.keep_best_val && rec.val_data < best_val) {
            best_val = rec.val_data;
            report.best_val_params = params;
        }
    }

    report.final_params = std::move(params);
    return report;
}

void write_train_report_csv(const TrainReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write training report: " + path.string());
    out << "epoch,train_total,train_data,train_physics,val_data\n";
    char buf[32];
    auto emit = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out << std::string_view(buf, ptr - buf);
    };
    for (std::size_t i = 0; i < report.epochs.size(); ++i) {
        const EpochRecord& r = report.epochs[i];
        out << (i + 1) << ',';
        emit(r.train_total);
        out << ',';
        emit(r.train_data);
        out << ',';
        emit(r.train_physics);
        out << ',';
        emit(r.val_data);
        out << '\n';
    }
}

} // namespace tempcast
