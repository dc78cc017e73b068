#include "tempcast/tape.hpp"

#include <Eigen/Core>
#include <cstring>
#include <stdexcept>

namespace tempcast {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<const RowMajorMatrix>;
using MutableMatrixMap = Eigen::Map<RowMajorMatrix>;

MatrixMap as_matrix(const Tensor& t) {
    return MatrixMap(t.data().data(), static_cast<Eigen::Index>(t.shape()[0]),
                     static_cast<Eigen::Index>(t.shape()[1]));
}

// g @ b^T
Tensor matmul_nt(const Tensor& g, const Tensor& b) {
    Tensor out = Tensor::uninitialized({g.shape()[0], b.shape()[0]});
    MutableMatrixMap(out.data().data(), static_cast<Eigen::Index>(g.shape()[0]),
                     static_cast<Eigen::Index>(b.shape()[0]))
        .noalias() = as_matrix(g) * as_matrix(b).transpose();
    return out;
}

// a^T @ g
Tensor matmul_tn(const Tensor& a, const Tensor& g) {
    Tensor out = Tensor::uninitialized({a.shape()[1], g.shape()[1]});
    MutableMatrixMap(out.data().data(), static_cast<Eigen::Index>(a.shape()[1]),
                     static_cast<Eigen::Index>(g.shape()[1]))
        .noalias() = as_matrix(a).transpose() * as_matrix(g);
    return out;
}

} // namespace

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::leaf: return "leaf";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::matmul: return "matmul";
        case OpKind::tanh_fn: return "tanh";
        case OpKind::sigmoid_fn: return "sigmoid";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::mean: return "mean";
        case OpKind::square: return "square";
        case OpKind::scale: return "scale";
    }
    return "?";
}

bool Gradients::contains(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < present_.size() && present_[static_cast<std::size_t>(id)];
}

const Tensor& Gradients::at(NodeId id) const {
    if (!contains(id))
        throw std::out_of_range("Gradients: node " + std::to_string(id) + " not reachable from loss");
    return grads_[static_cast<std::size_t>(id)];
}

std::size_t Tape::check(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::out_of_range("Tape: bad node id " + std::to_string(id));
    return static_cast<std::size_t>(id);
}

NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor Tape::eval(const Node& n) const {
    const Tensor& a = nodes_[static_cast<std::size_t>(n.a)].value;
    switch (n.op) {
        case OpKind::add: return ops::add(a, nodes_[static_cast<std::size_t>(n.b)].value);
        case OpKind::sub: return ops::sub(a, nodes_[static_cast<std::size_t>(n.b)].value);
        case OpKind::mul: return ops::mul(a, nodes_[static_cast<std::size_t>(n.b)].value);
        case OpKind::matmul: return ops::matmul(a, nodes_[static_cast<std::size_t>(n.b)].value);
        case OpKind::concat: return ops::concat(a, nodes_[static_cast<std::size_t>(n.b)].value);
        case OpKind::tanh_fn: return ops::tanh(a);
        case OpKind::sigmoid_fn: return ops::sigmoid(a);
        case OpKind::square: return ops::square(a);
        case OpKind::scale: return ops::scale(a, n.c);
        case OpKind::mean: return ops::mean(a);
        case OpKind::slice: return ops::slice(a, n.lo, n.hi);
        case OpKind::leaf: break;
    }
    throw std::logic_error("Tape::eval: leaf has no parents");
}

NodeId Tape::leaf(Tensor value) {
    Node n;
    n.op = OpKind::leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    Node n{OpKind::add, a, b};
    check(a);
    check(b);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Node n{OpKind::sub, a, b};
    check(a);
    check(b);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    Node n{OpKind::mul, a, b};
    check(a);
    check(b);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n{OpKind::matmul, a, b};
    check(a);
    check(b);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    Node n{OpKind::tanh_fn, a};
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
    Node n{OpKind::sigmoid_fn, a};
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::square(NodeId a) {
    Node n{OpKind::square, a};
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double c) {
    Node n{OpKind::scale, a};
    n.c = c;
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::mean(NodeId a) {
    Node n{OpKind::mean, a};
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::slice(NodeId a, std::size_t lo, std::size_t hi) {
    Node n{OpKind::slice, a};
    n.lo = lo;
    n.hi = hi;
    check(a);
    n.value = eval(n);
    return push(std::move(n));
}

NodeId Tape::concat(NodeId a, NodeId b) {
    Node n{OpKind::concat, a, b};
    check(a);
    check(b);
    n.lo = value(a).is_matrix() ? value(a).shape()[1] : value(a).shape()[0];  // split point
    n.value = eval(n);
    return push(std::move(n));
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        if (n.op == OpKind::leaf) continue;
        Tensor again = eval(n);
        if (!again.same_shape(n.value)) return false;
        if (std::memcmp(again.data().data(), n.value.data().data(), again.size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

namespace {

void accumulate(std::vector<Tensor>& grads, std::vector<char>& present, NodeId id, Tensor&& g) {
    auto i = static_cast<std::size_t>(id);
    if (!present[i]) {
        grads[i] = std::move(g);
        present[i] = 1;
        return;
    }
    Tensor& dst = grads[i];
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += g[k];
}

// Reduce an upstream [N, C] gradient onto a row-broadcast [1, C] operand.
Tensor reduce_rows(const Tensor& g) {
    const std::size_t rows = g.shape()[0];
    const std::size_t cols = g.shape()[1];
    Tensor out = Tensor::zeros({1, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c] += g[r * cols + c];
    return out;
}

} // namespace

Gradients Tape::backward(NodeId loss) const {
    check(loss);
    if (value(loss).size() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_string(value(loss).shape()));

    // Mark ancestors of the loss.
    std::vector<char> reachable(nodes_.size(), 0);
    reachable[static_cast<std::size_t>(loss)] = 1;
    for (NodeId id = loss; id >= 0; --id) {
        if (!reachable[static_cast<std::size_t>(id)]) continue;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.a >= 0) reachable[static_cast<std::size_t>(n.a)] = 1;
        if (n.b >= 0) reachable[static_cast<std::size_t>(n.b)] = 1;
    }

    Gradients out(nodes_.size());
    auto& grads = out.grads_;
    auto& present = out.present_;
    {
        Tensor seed = Tensor::uninitialized(value(loss).shape());
        seed[0] = 1.0;
        accumulate(grads, present, loss, std::move(seed));
    }

    for (NodeId id = loss; id >= 0; --id) {
        const auto i = static_cast<std::size_t>(id);
        if (!reachable[i] || nodes_[i].op == OpKind::leaf) continue;
        const Node& n = nodes_[i];
        const Tensor& g = grads[i];
        const Tensor& av = nodes_[static_cast<std::size_t>(n.a)].value;

        switch (n.op) {
            case OpKind::add: {
                const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                accumulate(grads, present, n.a, Tensor(g));
                if (bv.same_shape(g)) {
                    accumulate(grads, present, n.b, Tensor(g));
                } else {
                    accumulate(grads, present, n.b, reduce_rows(g));
                }
                break;
            }
            case OpKind::sub: {
                const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                accumulate(grads, present, n.a, Tensor(g));
                Tensor neg = bv.same_shape(g) ? ops::scale(g, -1.0) : ops::scale(reduce_rows(g), -1.0);
                accumulate(grads, present, n.b, std::move(neg));
                break;
            }
            case OpKind::mul: {
                const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                accumulate(grads, present, n.a, ops::mul(g, bv));
                accumulate(grads, present, n.b, ops::mul(g, av));
                break;
            }
            case OpKind::matmul: {
                const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                accumulate(grads, present, n.a, matmul_nt(g, bv));
                accumulate(grads, present, n.b, matmul_tn(av, g));
                break;
            }
            case OpKind::tanh_fn: {
                Tensor da = Tensor::uninitialized(av.shape());
                for (std::size_t k = 0; k < da.size(); ++k) {
                    const double y = n.value[k];
                    da[k] = g[k] * (1.0 - y * y);
                }
                accumulate(grads, present, n.a, std::move(da));
                break;
            }
            case OpKind::sigmoid_fn: {
                Tensor da = Tensor::uninitialized(av.shape());
                for (std::size_t k = 0; k < da.size(); ++k) {
                    const double y = n.value[k];
                    da[k] = g[k] * y * (1.0 - y);
                }
                accumulate(grads, present, n.a, std::move(da));
                break;
            }
            case OpKind::square: {
                Tensor da = Tensor::uninitialized(av.shape());
                for (std::size_t k = 0; k < da.size(); ++k) da[k] = g[k] * 2.0 * av[k];
                accumulate(grads, present, n.a, std::move(da));
                break;
            }
            case OpKind::scale:
                accumulate(grads, present, n.a, ops::scale(g, n.c));
                break;
            case OpKind::mean: {
                const double share = g[0] / static_cast<double>(av.size());
                accumulate(grads, present, n.a, Tensor::full(av.shape(), share));
                break;
            }
            case OpKind::slice: {
                Tensor da = Tensor::zeros(av.shape());
                if (!av.is_matrix()) {
                    for (std::size_t k = n.lo; k < n.hi; ++k) da[k] = g[k - n.lo];
                } else {
                    const std::size_t cols = av.shape()[1];
                    const std::size_t width = n.hi - n.lo;
                    for (std::size_t r = 0; r < av.shape()[0]; ++r)
                        for (std::size_t c = 0; c < width; ++c)
                            da[r * cols + n.lo + c] = g[r * width + c];
                }
                accumulate(grads, present, n.a, std::move(da));
                break;
            }
            case OpKind::concat: {
                const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
                if (!av.is_matrix()) {
                    accumulate(grads, present, n.a, ops::slice(g, 0, n.lo));
                    accumulate(grads, present, n.b, ops::slice(g, n.lo, n.lo + bv.shape()[0]));
                } else {
                    accumulate(grads, present, n.a, ops::slice(g, 0, n.lo));
                    accumulate(grads, present, n.b, ops::slice(g, n.lo, n.lo + bv.shape()[1]));
                }
                break;
            }
            case OpKind::leaf:
                break;
        }
    }
    return out;
}

} // namespace tempcast
