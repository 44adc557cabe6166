#include "partforge/graph.hpp"

#include <cmath>

namespace partforge {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::make_node(std::string op, Tensor value, std::vector<int> inputs,
                     std::function<void(Graph&, int)> backward_fn) {
    if (!value.all_finite())
        fail(ErrorKind::numeric, "op '" + op + "' produced a non-finite value");
    Node n;
    n.value = std::move(value);
    n.op = std::move(op);
    n.inputs = std::move(inputs);
    for (int i : n.inputs)
        if (nodes_[static_cast<std::size_t>(i)].needs_grad) n.needs_grad = true;
    if (n.needs_grad) n.backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.op = "const";
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value) {
    Node n;
    n.needs_grad = value.requires_grad;
    n.value = std::move(value);
    n.op = "leaf";
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(const Tensor& external) { return leaf(external); }

const Tensor& Graph::value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }

const Tensor& Graph::grad(Var v) { return grad_ref(v.id); }

Tensor& Graph::grad_ref(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_live) {
        n.grad = Tensor::zeros(n.value.shape());
        n.grad_live = true;
    }
    return n.grad;
}

void Graph::backward(Var loss) {
    if (loss.graph != this) fail(ErrorKind::contract, "backward: loss from a different graph");
    if (!value(loss).is_scalar()) fail(ErrorKind::contract, "backward: loss must be scalar");

    for (Node& n : nodes_) n.grad_live = false;

    // Mark the subgraph reachable from the loss.
    std::vector<char> reach(nodes_.size(), 0);
    std::vector<int> stack{loss.id};
    reach[static_cast<std::size_t>(loss.id)] = 1;
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        for (int i : nodes_[static_cast<std::size_t>(id)].inputs) {
            if (!reach[static_cast<std::size_t>(i)]) {
                reach[static_cast<std::size_t>(i)] = 1;
                stack.push_back(i);
            }
        }
    }

    grad_ref(loss.id).at(0) = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!reach[static_cast<std::size_t>(id)] || !n.needs_grad || !n.backward_fn) continue;
        if (!n.grad_live) continue; // reachable only through grad-free paths
        n.backward_fn(*this, id);
    }
}

// ---------------------------------------------------------------------------
// Op helpers
// ---------------------------------------------------------------------------

namespace {

Graph& same_graph(Var a, Var b) {
    if (a.graph != b.graph) fail(ErrorKind::contract, "operands belong to different graphs");
    return *a.graph;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        fail(ErrorKind::shape, std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void require_rowvec(const Tensor& x, const Tensor& v, const char* op) {
    if (v.rows() != 1 || v.cols() != x.cols())
        fail(ErrorKind::shape,
             std::string(op) + ": vector " + v.shape_str() + " does not broadcast over " + x.shape_str());
}

} // namespace

Var add(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    require_same_shape(av, bv, "add");
    Tensor out = av;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) += bv.at(i);
    return g.make_node("add", std::move(out), {a.id, b.id}, [](Graph& g, int self) {
        const auto& n = g.node(self);
        for (int k = 0; k < 2; ++k) {
            int in = n.inputs[static_cast<std::size_t>(k)];
            if (!g.needs_grad(in)) continue;
            Tensor& gi = g.grad_ref(in);
            for (std::int64_t i = 0; i < gi.numel(); ++i) gi.at(i) += n.grad.at(i);
        }
    });
}

Var sub(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    require_same_shape(av, bv, "sub");
    Tensor out = av;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) -= bv.at(i);
    return g.make_node("sub", std::move(out), {a.id, b.id}, [](Graph& g, int self) {
        const auto& n = g.node(self);
        if (g.needs_grad(n.inputs[0])) {
            Tensor& ga = g.grad_ref(n.inputs[0]);
            for (std::int64_t i = 0; i < ga.numel(); ++i) ga.at(i) += n.grad.at(i);
        }
        if (g.needs_grad(n.inputs[1])) {
            Tensor& gb = g.grad_ref(n.inputs[1]);
            for (std::int64_t i = 0; i < gb.numel(); ++i) gb.at(i) -= n.grad.at(i);
        }
    });
}

Var mul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    require_same_shape(av, bv, "mul");
    Tensor out = av;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) *= bv.at(i);
    return g.make_node("mul", std::move(out), {a.id, b.id}, [](Graph& g, int self) {
        const auto& n = g.node(self);
        const Tensor& av = g.node(n.inputs[0]).value;
        const Tensor& bv = g.node(n.inputs[1]).value;
        if (g.needs_grad(n.inputs[0])) {
            Tensor& ga = g.grad_ref(n.inputs[0]);
            for (std::int64_t i = 0; i < ga.numel(); ++i) ga.at(i) += n.grad.at(i) * bv.at(i);
        }
        if (g.needs_grad(n.inputs[1])) {
            Tensor& gb = g.grad_ref(n.inputs[1]);
            for (std::int64_t i = 0; i < gb.numel(); ++i) gb.at(i) += n.grad.at(i) * av.at(i);
        }
    });
}

Var scale(Var a, double s) {
    Graph& g = *a.graph;
    Tensor out = g.value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.at(i) *= s;
    return g.make_node("scale", std::move(out), {a.id}, [s](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& ga = g.grad_ref(n.inputs[0]);
        for (std::int64_t i = 0; i < ga.numel(); ++i) ga.at(i) += s * n.grad.at(i);
    });
}

Var matmul(Var a, Var b) {
    Graph& g = same_graph(a, b);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    const std::int64_t m = av.rows(), k = av.cols(), k2 = bv.rows(), n = bv.cols();
    if (k != k2)
        fail(ErrorKind::shape, "matmul: inner extents differ, " + av.shape_str() + " vs " + bv.shape_str());
    Tensor out({m, n});
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = av.data() + i * k;
        double* orow = out.data() + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = bv.data() + p * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    return g.make_node("matmul", std::move(out), {a.id, b.id}, [m, k, n](Graph& g, int self) {
        const auto& nd = g.node(self);
        const Tensor& av = g.node(nd.inputs[0]).value;
        const Tensor& bv = g.node(nd.inputs[1]).value;
        const Tensor& dc = nd.grad;
        if (g.needs_grad(nd.inputs[0])) {
            // dA = dC * B^T
            Tensor& ga = g.grad_ref(nd.inputs[0]);
            for (std::int64_t i = 0; i < m; ++i)
                for (std::int64_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    const double* dcrow = dc.data() + i * n;
                    const double* brow = bv.data() + p * n;
                    for (std::int64_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
                    ga.at(i, p) += acc;
                }
        }
        if (g.needs_grad(nd.inputs[1])) {
            // dB = A^T * dC
            Tensor& gb = g.grad_ref(nd.inputs[1]);
            for (std::int64_t p = 0; p < k; ++p) {
                double* gbrow = gb.data() + p * n;
                for (std::int64_t i = 0; i < m; ++i) {
                    const double api = av.at(i, p);
                    const double* dcrow = dc.data() + i * n;
                    for (std::int64_t j = 0; j < n; ++j) gbrow[j] += api * dcrow[j];
                }
            }
        }
    });
}

Var transpose(Var a) {
    Graph& g = *a.graph;
    const Tensor& av = g.value(a);
    const std::int64_t r = av.rows(), c = av.cols();
    Tensor out({c, r});
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
    return g.make_node("transpose", std::move(out), {a.id}, [r, c](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& ga = g.grad_ref(n.inputs[0]);
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < c; ++j) ga.at(i, j) += n.grad.at(j, i);
    });
}

Var add_rowvec(Var x, Var v) {
    Graph& g = same_graph(x, v);
    const Tensor& xv = g.value(x);
    const Tensor& vv = g.value(v);
    require_rowvec(xv, vv, "add_rowvec");
    const std::int64_t r = xv.rows(), c = xv.cols();
    Tensor out = xv;
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out.at(i * c + j) += vv.at(j);
    return g.make_node("add_rowvec", std::move(out), {x.id, v.id}, [r, c](Graph& g, int self) {
        const auto& n = g.node(self);
        if (g.needs_grad(n.inputs[0])) {
            Tensor& gx = g.grad_ref(n.inputs[0]);
            for (std::int64_t i = 0; i < gx.numel(); ++i) gx.at(i) += n.grad.at(i);
        }
        if (g.needs_grad(n.inputs[1])) {
            Tensor& gv = g.grad_ref(n.inputs[1]);
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < c; ++j) gv.at(j) += n.grad.at(i * c + j);
        }
    });
}

Var mul_rowvec(Var x, Var v) {
    Graph& g = same_graph(x, v);
    const Tensor& xv = g.value(x);
    const Tensor& vv = g.value(v);
    require_rowvec(xv, vv, "mul_rowvec");
    const std::int64_t r = xv.rows(), c = xv.cols();
    Tensor out = xv;
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out.at(i * c + j) *= vv.at(j);
    return g.make_node("mul_rowvec", std::move(out), {x.id, v.id}, [r, c](Graph& g, int self) {
        const auto& n = g.node(self);
        const Tensor& xv = g.node(n.inputs[0]).value;
        const Tensor& vv = g.node(n.inputs[1]).value;
        if (g.needs_grad(n.inputs[0])) {
            Tensor& gx = g.grad_ref(n.inputs[0]);
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < c; ++j) gx.at(i * c + j) += n.grad.at(i * c + j) * vv.at(j);
        }
        if (g.needs_grad(n.inputs[1])) {
            Tensor& gv = g.grad_ref(n.inputs[1]);
            for (std::int64_t i = 0; i < r; ++i)
                for (std::int64_t j = 0; j < c; ++j) gv.at(j) += n.grad.at(i * c + j) * xv.at(i * c + j);
        }
    });
}

Var softmax_rows(Var x) {
    Graph& g = *x.graph;
    const Tensor& xv = g.value(x);
    const std::int64_t r = xv.rows(), c = xv.cols();
    Tensor out = xv;
    for (std::int64_t i = 0; i < r; ++i) {
        double* row = out.data() + i * c;
        double mx = row[0];
        for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::int64_t j = 0; j < c; ++j) row[j] /= sum;
    }
    return g.make_node("softmax_rows", std::move(out), {x.id}, [r, c](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& gx = g.grad_ref(n.inputs[0]);
        const Tensor& y = n.value;
        for (std::int64_t i = 0; i < r; ++i) {
            const double* yrow = y.data() + i * c;
            const double* drow = n.grad.data() + i * c;
            double dot = 0.0;
            for (std::int64_t j = 0; j < c; ++j) dot += drow[j] * yrow[j];
            for (std::int64_t j = 0; j < c; ++j) gx.at(i * c + j) += yrow[j] * (drow[j] - dot);
        }
    });
}

Var layer_norm(Var x, Var gain, Var bias) {
    constexpr double kEps = 1e-5;
    Graph& g = same_graph(x, gain);
    same_graph(x, bias);
    const Tensor& xv = g.value(x);
    const Tensor& gv = g.value(gain);
    const Tensor& bv = g.value(bias);
    require_rowvec(xv, gv, "layer_norm gain");
    require_rowvec(xv, bv, "layer_norm bias");
    const std::int64_t r = xv.rows(), c = xv.cols();

    Tensor out({r, c});
    Tensor xhat({r, c});
    Tensor inv_std({r});
    for (std::int64_t i = 0; i < r; ++i) {
        const double* row = xv.data() + i * c;
        double mean = 0.0;
        for (std::int64_t j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::int64_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + kEps);
        inv_std.at(i) = is;
        for (std::int64_t j = 0; j < c; ++j) {
            const double xh = (row[j] - mean) * is;
            xhat.at(i, j) = xh;
            out.at(i, j) = xh * gv.at(j) + bv.at(j);
        }
    }
    return g.make_node(
        "layer_norm", std::move(out), {x.id, gain.id, bias.id},
        [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, int self) {
            const auto& n = g.node(self);
            const Tensor& gv = g.node(n.inputs[1]).value;
            const double cn = static_cast<double>(c);
            if (g.needs_grad(n.inputs[0])) {
                Tensor& gx = g.grad_ref(n.inputs[0]);
                for (std::int64_t i = 0; i < r; ++i) {
                    const double* drow = n.grad.data() + i * c;
                    const double* xr = xhat.data() + i * c;
                    double mean_dy = 0.0, mean_dy_xhat = 0.0;
                    for (std::int64_t j = 0; j < c; ++j) {
                        const double dyg = drow[j] * gv.at(j);
                        mean_dy += dyg;
                        mean_dy_xhat += dyg * xr[j];
                    }
                    mean_dy /= cn;
                    mean_dy_xhat /= cn;
                    for (std::int64_t j = 0; j < c; ++j) {
                        const double dyg = drow[j] * gv.at(j);
                        gx.at(i * c + j) += inv_std.at(i) * (dyg - mean_dy - xr[j] * mean_dy_xhat);
                    }
                }
            }
            if (g.needs_grad(n.inputs[1])) {
                Tensor& gg = g.grad_ref(n.inputs[1]);
                for (std::int64_t i = 0; i < r; ++i)
                    for (std::int64_t j = 0; j < c; ++j) gg.at(j) += n.grad.at(i * c + j) * xhat.at(i, j);
            }
            if (g.needs_grad(n.inputs[2])) {
                Tensor& gb = g.grad_ref(n.inputs[2]);
                for (std::int64_t i = 0; i < r; ++i)
                    for (std::int64_t j = 0; j < c; ++j) gb.at(j) += n.grad.at(i * c + j);
            }
        });
}

Var gelu(Var x) {
    constexpr double kC0 = 0.7978845608028653558798921198687; // sqrt(2/pi)
    constexpr double kC1 = 0.044715;
    Graph& g = *x.graph;
    Tensor out = g.value(x);
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const double v = out.at(i);
        out.at(i) = 0.5 * v * (1.0 + std::tanh(kC0 * (v + kC1 * v * v * v)));
    }
    return g.make_node("gelu", std::move(out), {x.id}, [](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        const Tensor& xv = g.node(n.inputs[0]).value;
        Tensor& gx = g.grad_ref(n.inputs[0]);
        for (std::int64_t i = 0; i < gx.numel(); ++i) {
            const double v = xv.at(i);
            const double u = kC0 * (v + kC1 * v * v * v);
            const double t = std::tanh(u);
            const double du = kC0 * (1.0 + 3.0 * kC1 * v * v);
            gx.at(i) += n.grad.at(i) * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
        }
    });
}

Var linear(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

Var sum_all(Var x) {
    Graph& g = *x.graph;
    const Tensor& xv = g.value(x);
    double s = 0.0;
    for (std::int64_t i = 0; i < xv.numel(); ++i) s += xv.at(i);
    return g.make_node("sum_all", Tensor::scalar(s), {x.id}, [](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& gx = g.grad_ref(n.inputs[0]);
        const double d = n.grad.at(0);
        for (std::int64_t i = 0; i < gx.numel(); ++i) gx.at(i) += d;
    });
}

Var mean_all(Var x) {
    Graph& g = *x.graph;
    const std::int64_t n = g.value(x).numel();
    return scale(sum_all(x), 1.0 / static_cast<double>(n));
}

Var slice_rows(Var x, std::int64_t r0, std::int64_t r1) {
    Graph& g = *x.graph;
    const Tensor& xv = g.value(x);
    const std::int64_t r = xv.rows(), c = xv.cols();
    if (r0 < 0 || r1 > r || r0 >= r1) fail(ErrorKind::shape, "slice_rows: bad range");
    Tensor out({r1 - r0, c});
    for (std::int64_t i = r0; i < r1; ++i)
        for (std::int64_t j = 0; j < c; ++j) out.at(i - r0, j) = xv.at(i, j);
    return g.make_node("slice_rows", std::move(out), {x.id}, [r0, r1, c](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& gx = g.grad_ref(n.inputs[0]);
        for (std::int64_t i = r0; i < r1; ++i)
            for (std::int64_t j = 0; j < c; ++j) gx.at(i * c + j) += n.grad.at((i - r0) * c + j);
    });
}

Var slice_cols(Var x, std::int64_t c0, std::int64_t c1) {
    Graph& g = *x.graph;
    const Tensor& xv = g.value(x);
    const std::int64_t r = xv.rows(), c = xv.cols();
    if (c0 < 0 || c1 > c || c0 >= c1) fail(ErrorKind::shape, "slice_cols: bad range");
    Tensor out({r, c1 - c0});
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = c0; j < c1; ++j) out.at(i, j - c0) = xv.at(i, j);
    return g.make_node("slice_cols", std::move(out), {x.id}, [r, c0, c1, c](Graph& g, int self) {
        const auto& n = g.node(self);
        if (!g.needs_grad(n.inputs[0])) return;
        Tensor& gx = g.grad_ref(n.inputs[0]);
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = c0; j < c1; ++j) gx.at(i * c + j) += n.grad.at(i * (c1 - c0) + (j - c0));
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) fail(ErrorKind::shape, "concat_rows: no parts");
    Graph& g = *parts[0].graph;
    const std::int64_t c = g.value(parts[0]).cols();
    std::int64_t total = 0;
    std::vector<int> ids;
    std::vector<std::int64_t> offsets;
    for (Var p : parts) {
        same_graph(parts[0], p);
        if (g.value(p).cols() != c) fail(ErrorKind::shape, "concat_rows: column mismatch");
        offsets.push_back(total);
        total += g.value(p).rows();
        ids.push_back(p.id);
    }
    Tensor out({total, c});
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = g.value(parts[k]);
        for (std::int64_t i = 0; i < pv.rows(); ++i)
            for (std::int64_t j = 0; j < c; ++j) out.at(offsets[k] + i, j) = pv.at(i, j);
    }
    return g.make_node("concat_rows", std::move(out), std::move(ids),
                       [offsets, c](Graph& g, int self) {
                           const auto& n = g.node(self);
                           for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                               int in = n.inputs[k];
                               if (!g.needs_grad(in)) continue;
                               Tensor& gp = g.grad_ref(in);
                               const std::int64_t rk = gp.rows();
                               for (std::int64_t i = 0; i < rk; ++i)
                                   for (std::int64_t j = 0; j < c; ++j)
                                       gp.at(i * c + j) += n.grad.at((offsets[k] + i) * c + j);
                           }
                       });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) fail(ErrorKind::shape, "concat_cols: no parts");
    Graph& g = *parts[0].graph;
    const std::int64_t r = g.value(parts[0]).rows();
    std::int64_t total = 0;
    std::vector<int> ids;
    std::vector<std::int64_t> offsets;
    for (Var p : parts) {
        same_graph(parts[0], p);
        if (g.value(p).rows() != r) fail(ErrorKind::shape, "concat_cols: row mismatch");
        offsets.push_back(total);
        total += g.value(p).cols();
        ids.push_back(p.id);
    }
    Tensor out({r, total});
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = g.value(parts[k]);
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < pv.cols(); ++j) out.at(i, offsets[k] + j) = pv.at(i, j);
    }
    return g.make_node("concat_cols", std::move(out), std::move(ids),
                       [offsets, r, total](Graph& g, int self) {
                           const auto& n = g.node(self);
                           for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                               int in = n.inputs[k];
                               if (!g.needs_grad(in)) continue;
                               Tensor& gp = g.grad_ref(in);
                               const std::int64_t ck = gp.cols();
                               for (std::int64_t i = 0; i < r; ++i)
                                   for (std::int64_t j = 0; j < ck; ++j)
                                       gp.at(i * ck + j) += n.grad.at(i * total + offsets[k] + j);
                           }
                       });
}

} // namespace partforge
