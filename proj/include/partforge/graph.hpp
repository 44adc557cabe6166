#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "partforge/tensor.hpp"

namespace partforge {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid as long as the graph lives.
struct Var {
    Graph* graph = nullptr;
    int id = -1;

    bool valid() const { return graph != nullptr && id >= 0; }
    const Tensor& value() const;
};

// Reverse-mode tape. Nodes are appended in construction order, which is a
// topological order by construction; backward() walks it once in reverse.
// One graph serves one forward/backward pass; build a fresh graph per step.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Leaf that never receives a gradient.
    Var constant(Tensor value);
    // Leaf whose gradient is wanted; honors value.requires_grad.
    Var leaf(Tensor value);
    // Leaf snapshotting an external parameter tensor (requires_grad respected).
    Var param(const Tensor& external);

    const Tensor& value(Var v) const;
    // Gradient accumulated by the last backward(); zeros if the node was not reached.
    const Tensor& grad(Var v);

    // Reverse sweep from a scalar loss. Deterministic: same graph, same result.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    // --- internals shared with the op implementations ---
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        bool grad_live = false; // grad allocated and zeroed for the current backward
        std::string op;
        std::vector<int> inputs;
        std::function<void(Graph&, int)> backward_fn;
    };

    Var make_node(std::string op, Tensor value, std::vector<int> inputs,
                  std::function<void(Graph&, int)> backward_fn);
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Tensor& grad_ref(int id);

private:
    std::deque<Node> nodes_; // deque: node references stay valid as the tape grows
};

// ---------------------------------------------------------------------------
// Ops. All enforce shapes eagerly and record exact gradients.
// ---------------------------------------------------------------------------

Var add(Var a, Var b);        // elementwise, same shape
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var matmul(Var a, Var b);     // [m x k] * [k x n]
Var transpose(Var a);
Var add_rowvec(Var x, Var v); // broadcast a length-C vector over the rows of [R x C]
Var mul_rowvec(Var x, Var v);
Var softmax_rows(Var x);      // row-max subtraction inside
Var layer_norm(Var x, Var gain, Var bias); // per-row, epsilon 1e-5 inside the sqrt
Var gelu(Var x);              // tanh approximation
Var linear(Var x, Var w, Var b);           // matmul + bias row broadcast
Var sum_all(Var x);           // -> scalar
Var mean_all(Var x);          // -> scalar
Var slice_rows(Var x, std::int64_t r0, std::int64_t r1);
Var slice_cols(Var x, std::int64_t c0, std::int64_t c1);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);

} // namespace partforge
