#pragma once

// Naive reference attention used as an oracle: explicit double loops, its own
// softmax, optional pair mask. Deliberately independent of the graph ops.

#include <cmath>
#include <functional>
#include <vector>

#include "partforge/tensor.hpp"

namespace partforge::testing {

inline Tensor ref_project(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor out({x.rows(), w.cols()});
    for (std::int64_t i = 0; i < x.rows(); ++i)
        for (std::int64_t j = 0; j < w.cols(); ++j) {
            double acc = b.at(j);
            for (std::int64_t k = 0; k < x.cols(); ++k) acc += x.at(i, k) * w.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

// allowed(i, j): may query row i attend to key row j. Keys use no bias.
// k_src and v_src are usually the same tensor; passing different ones probes
// softmax shift invariance (perturb keys, hold values).
inline Tensor ref_multihead_attention_kv(
    const Tensor& q_src, const Tensor& k_src, const Tensor& v_src, const Tensor& wq,
    const Tensor& bq, const Tensor& wk, const Tensor& wv, const Tensor& bv, const Tensor& wo,
    const Tensor& bo, int heads,
    const std::function<bool(std::int64_t, std::int64_t)>& allowed) {
    const Tensor q = ref_project(q_src, wq, bq);
    const Tensor k = ref_project(k_src, wk, Tensor::zeros({wk.cols()}));
    const Tensor v = ref_project(v_src, wv, bv);
    const std::int64_t rows = q.rows(), keys = k.rows(), width = q.cols();
    const std::int64_t d = width / heads;

    Tensor merged({rows, width});
    for (int h = 0; h < heads; ++h) {
        const std::int64_t off = h * d;
        for (std::int64_t i = 0; i < rows; ++i) {
            std::vector<double> logits(static_cast<std::size_t>(keys),
                                       -std::numeric_limits<double>::infinity());
            double mx = -std::numeric_limits<double>::infinity();
            for (std::int64_t j = 0; j < keys; ++j) {
                if (!allowed(i, j)) continue;
                double dot = 0.0;
                for (std::int64_t c = 0; c < d; ++c) dot += q.at(i, off + c) * k.at(j, off + c);
                logits[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(d));
                mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
            }
            double denom = 0.0;
            for (std::int64_t j = 0; j < keys; ++j)
                if (allowed(i, j)) denom += std::exp(logits[static_cast<std::size_t>(j)] - mx);
            for (std::int64_t j = 0; j < keys; ++j) {
                if (!allowed(i, j)) continue;
                const double w = std::exp(logits[static_cast<std::size_t>(j)] - mx) / denom;
                for (std::int64_t c = 0; c < d; ++c) merged.at(i, off + c) += w * v.at(j, off + c);
            }
        }
    }
    return ref_project(merged, wo, bo);
}

inline Tensor ref_multihead_attention(
    const Tensor& q_src, const Tensor& kv_src, const Tensor& wq, const Tensor& bq,
    const Tensor& wk, const Tensor& wv, const Tensor& bv, const Tensor& wo, const Tensor& bo,
    int heads, const std::function<bool(std::int64_t, std::int64_t)>& allowed) {
    return ref_multihead_attention_kv(q_src, kv_src, kv_src, wq, bq, wk, wv, bv, wo, bo, heads,
                                      allowed);
}

} // namespace partforge::testing
