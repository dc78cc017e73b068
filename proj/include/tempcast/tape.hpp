#pragma once

#include <cstdint>
#include <vector>

#include "tempcast/tensor.hpp"

namespace tempcast {

enum class OpKind {
    leaf,
    add,
    sub,
    mul,
    matmul,
    tanh_fn,
    sigmoid_fn,
    concat,
    slice,
    mean,
    square,
    scale,
};

const char* op_name(OpKind op);

using NodeId = std::int32_t;

// Gradient of a scalar loss with respect to every node reachable from it.
// Nodes not reachable from the loss are absent.
class Gradients {
public:
    explicit Gradients(std::size_t node_count) : grads_(node_count), present_(node_count, 0) {}

    bool contains(NodeId id) const;
    const Tensor& at(NodeId id) const;  // throws if absent

private:
    friend class Tape;
    std::vector<Tensor> grads_;
    std::vector<char> present_;
};

// Append-only record of a forward computation. Parents always precede
// children, so one reverse sweep accumulates all gradients. Single-threaded
// per tape; independent tapes are fine on separate threads.
class Tape {
public:
    struct Node {
        OpKind op = OpKind::leaf;
        NodeId a = -1;
        NodeId b = -1;
        double c = 0.0;        // scale factor
        std::size_t lo = 0;    // slice range / concat split point
        std::size_t hi = 0;
        Tensor value;
    };

    NodeId leaf(Tensor value);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId tanh(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId square(NodeId a);
    NodeId scale(NodeId a, double c);
    NodeId mean(NodeId a);
    NodeId slice(NodeId a, std::size_t lo, std::size_t hi);
    NodeId concat(NodeId a, NodeId b);

    const Tensor& value(NodeId id) const { return nodes_[check(id)].value; }
    const Node& node(NodeId id) const { return nodes_[check(id)]; }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // Recomputes every non-leaf value from its parents and compares
    // bit-for-bit against what was recorded. For replay tests.
    bool replay_matches() const;

    // Reverse accumulation from a scalar loss node.
    Gradients backward(NodeId loss) const;

private:
    NodeId push(Node node);
    std::size_t check(NodeId id) const;
    Tensor eval(const Node& node) const;

    std::vector<Node> nodes_;
};

} // namespace tempcast
