#pragma once

#include <map>
#include <string>
#include <vector>

#include "partforge/graph.hpp"
#include "partforge/latent.hpp"
#include "partforge/rng.hpp"

namespace partforge {

enum class AttnLevel { local, global };

// Architecture hyperparameters. Paper scale is depth 21 with 512 tokens per
// part; the defaults here are the desk-scale configuration.
struct DenoiserConfig {
    int depth = 6;
    std::int64_t width = 16;          // C, token channel width
    int heads = 4;                    // H, attention heads (width % heads == 0)
    std::int64_t tokens_per_part = 16; // K
    int max_parts = 8;                // N_max, identity table capacity
    std::int64_t cond_width = 16;     // channel width of condition tokens
    std::int64_t time_features = 128; // sinusoidal feature count for t
    std::int64_t time_embed_width = 64; // width of the learned time embedding
    // alternating | middle | sides, plus local_only / global_only ablations
    std::string schedule = "alternating";
    std::string id_injection = "input_only";
    std::string cond_injection = "every_block";

    void validate() const;
    // Per-block attention level. Alternating puts global attention at even
    // indices; middle/sides place the same number of global blocks elsewhere.
    std::vector<AttnLevel> levels() const;
    int global_block_count() const { return (depth + 1) / 2; }
};

struct NamedParam {
    std::string name;
    Tensor value;
};

// Condition tokens fed to cross-attention at both levels.
struct ConditionTokens {
    Tensor tokens; // M x cond_width, M >= 1
};

// QKV + output projections for one attention module, bound into a graph.
// Keys carry no bias: softmax is invariant to a row-constant shift, so a key
// bias would be an unidentifiable parameter with an exactly zero gradient.
struct AttentionParams {
    Var wq, bq, wk, wv, bv, wo, bo;
    int heads = 1;
};

// Multi-head self-attention restricted to each contiguous K-row block.
// No token attends across blocks.
Var local_attention(Var z, std::int64_t tokens_per_part, const AttentionParams& p);
// Multi-head self-attention over all rows jointly.
Var global_attention(Var z, const AttentionParams& p);
// Queries from z, keys/values from cond.
Var cross_attention(Var z, Var cond, const AttentionParams& p);

// The local-global DiT. Owns the named parameter store (including the part
// identity table); forward() builds the velocity-prediction graph.
class Denoiser {
public:
    Denoiser(DenoiserConfig config, Rng& rng);
    Denoiser(DenoiserConfig config, std::vector<NamedParam> params);

    const DenoiserConfig& config() const { return config_; }
    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

    // Leaves for every parameter, in parameter-store order.
    struct Bound {
        std::vector<Var> vars;
    };
    Bound bind(Graph& g) const;
    Var bound_param(const Bound& b, const std::string& name) const;

    // zt: NK x C; slots[b] is the identity slot of block b; t in [0,1];
    // cond: M x cond_width. Returns the velocity prediction, NK x C.
    Var forward(Graph& g, const Bound& b, Var zt, const std::vector<int>& slots, double t,
                Var cond) const;

    // Single pre-norm residual block: adaptive modulation from the time
    // embedding, self-attention at the block's level, cross-attention, MLP.
    Var run_block(Graph& g, const Bound& b, int block_index, Var h, Var t_embed, Var cond) const;

    // Plain-value convenience wrapper around forward().
    Tensor predict(const Tensor& zt, const std::vector<int>& slots, double t,
                   const Tensor& cond) const;

    // Sinusoidal features of t followed by the learned 2-layer MLP; 1 x C.
    Var time_embedding(Graph& g, const Bound& b, double t) const;

    std::int64_t parameter_count() const;

private:
    void build_params(Rng& rng);

    DenoiserConfig config_;
    std::vector<NamedParam> params_;
    std::map<std::string, std::size_t> index_;
};

// Raw sinusoidal features of t (cos half then sin half), 1 x n_features.
Tensor sinusoidal_time_features(double t, std::int64_t n_features);

} // namespace partforge
