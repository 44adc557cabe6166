#include "partforge/denoiser.hpp"

#include <cmath>

namespace partforge {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void DenoiserConfig::validate() const {
    if (depth < 1) fail(ErrorKind::config, "denoiser depth must be >= 1");
    if (width < 1 || heads < 1 || width % heads != 0)
        fail(ErrorKind::config, "denoiser width must be a positive multiple of heads");
    if (tokens_per_part < 1) fail(ErrorKind::config, "tokens_per_part must be >= 1");
    if (max_parts < 1) fail(ErrorKind::config, "max_parts must be >= 1");
    if (cond_width < 1) fail(ErrorKind::config, "cond_width must be >= 1");
    if (time_features < 2 || time_features % 2 != 0)
        fail(ErrorKind::config, "time_features must be a positive even number");
    if (time_embed_width < 1) fail(ErrorKind::config, "time_embed_width must be >= 1");
    if (schedule != "alternating" && schedule != "middle" && schedule != "sides" &&
        schedule != "local_only" && schedule != "global_only")
        fail(ErrorKind::config, "unknown attention schedule '" + schedule + "'");
    if (id_injection != "input_only")
        fail(ErrorKind::config, "unsupported id_injection '" + id_injection + "'");
    if (cond_injection != "every_block")
        fail(ErrorKind::config, "unsupported cond_injection '" + cond_injection + "'");
}

std::vector<AttnLevel> DenoiserConfig::levels() const {
    std::vector<AttnLevel> lv(static_cast<std::size_t>(depth), AttnLevel::local);
    const int g = global_block_count();
    if (schedule == "local_only") {
        return lv;
    } else if (schedule == "global_only") {
        std::fill(lv.begin(), lv.end(), AttnLevel::global);
    } else if (schedule == "alternating") {
        for (int i = 0; i < depth; i += 2) lv[static_cast<std::size_t>(i)] = AttnLevel::global;
    } else if (schedule == "middle") {
        const int start = (depth - g) / 2;
        for (int i = start; i < start + g; ++i) lv[static_cast<std::size_t>(i)] = AttnLevel::global;
    } else { // sides
        const int head = (g + 1) / 2;
        for (int i = 0; i < head; ++i) lv[static_cast<std::size_t>(i)] = AttnLevel::global;
        for (int i = depth - (g - head); i < depth; ++i)
            lv[static_cast<std::size_t>(i)] = AttnLevel::global;
    }
    return lv;
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

namespace {

// Standard multi-head attention with per-head QK^T/sqrt(d) softmax.
Var multi_head_attention(Var q_src, Var kv_src, const AttentionParams& p) {
    Graph& g = *q_src.graph;
    Var q = linear(q_src, p.wq, p.bq);
    Var k = matmul(kv_src, p.wk);
    Var v = linear(kv_src, p.wv, p.bv);
    const std::int64_t width = g.value(q).cols();
    const std::int64_t head_dim = width / p.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(p.heads));
    for (int h = 0; h < p.heads; ++h) {
        Var qh = slice_cols(q, h * head_dim, (h + 1) * head_dim);
        Var kh = slice_cols(k, h * head_dim, (h + 1) * head_dim);
        Var vh = slice_cols(v, h * head_dim, (h + 1) * head_dim);
        Var attn = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt_d));
        heads.push_back(matmul(attn, vh));
    }
    Var merged = p.heads == 1 ? heads[0] : concat_cols(heads);
    return linear(merged, p.wo, p.bo);
}

} // namespace

Var local_attention(Var z, std::int64_t tokens_per_part, const AttentionParams& p) {
    Graph& g = *z.graph;
    const std::int64_t rows = g.value(z).rows();
    if (tokens_per_part < 1 || rows % tokens_per_part != 0)
        fail(ErrorKind::shape, "local_attention: " + std::to_string(rows) +
                                   " rows do not partition into blocks of " +
                                   std::to_string(tokens_per_part));
    const std::int64_t n = rows / tokens_per_part;
    if (n == 1) return multi_head_attention(z, z, p);
    std::vector<Var> blocks;
    blocks.reserve(static_cast<std::size_t>(n));
    for (std::int64_t b = 0; b < n; ++b) {
        Var block = slice_rows(z, b * tokens_per_part, (b + 1) * tokens_per_part);
        blocks.push_back(multi_head_attention(block, block, p));
    }
    return concat_rows(blocks);
}

Var global_attention(Var z, const AttentionParams& p) { return multi_head_attention(z, z, p); }

Var cross_attention(Var z, Var cond, const AttentionParams& p) {
    return multi_head_attention(z, cond, p);
}

// ---------------------------------------------------------------------------
// Denoiser
// ---------------------------------------------------------------------------

Tensor sinusoidal_time_features(double t, std::int64_t n_features) {
    const std::int64_t half = n_features / 2;
    Tensor out({1, n_features});
    // Harmonic basis on [0,1]: smooth in t and fine enough to resolve the
    // steep late-time velocity gain. The sine half starts at harmonic 1;
    // sin(0) would be a permanently dead feature.
    constexpr double kPi = 3.14159265358979323846;
    for (std::int64_t i = 0; i < half; ++i) {
        out.at(0, i) = std::cos(kPi * static_cast<double>(i) * t);
        out.at(0, half + i) = std::sin(kPi * static_cast<double>(i + 1) * t);
    }
    return out;
}

Denoiser::Denoiser(DenoiserConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    build_params(rng);
    for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

Denoiser::Denoiser(DenoiserConfig config, std::vector<NamedParam> params)
    : config_(std::move(config)) {
    config_.validate();
    // Shape errors surface here, never mid-forward: check the provided store
    // against the layout this config implies.
    Rng layout_rng(0);
    build_params(layout_rng);
    if (params.size() != params_.size())
        fail(ErrorKind::shape, "parameter store has " + std::to_string(params.size()) +
                                   " tensors, config expects " + std::to_string(params_.size()));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params[i].name != params_[i].name)
            fail(ErrorKind::shape, "parameter " + std::to_string(i) + " is '" + params[i].name +
                                       "', expected '" + params_[i].name + "'");
        if (!params[i].value.same_shape(params_[i].value))
            fail(ErrorKind::shape, "parameter '" + params[i].name + "' has shape " +
                                       params[i].value.shape_str() + ", expected " +
                                       params_[i].value.shape_str());
    }
    params_ = std::move(params);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i].value.requires_grad = true;
        index_[params_[i].name] = i;
    }
}

void Denoiser::build_params(Rng& rng) {
    const std::int64_t c = config_.width;
    const std::int64_t dc = config_.cond_width;
    const std::int64_t tf = config_.time_features;
    const std::int64_t tw = config_.time_embed_width;
    const double init_std = 0.02;

    auto normal_init = [&](std::vector<std::int64_t> shape) {
        Tensor t(std::move(shape));
        for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = init_std * rng.normal();
        return t;
    };
    auto push = [&](const std::string& name, Tensor value) {
        value.requires_grad = true;
        params_.push_back({name, std::move(value)});
    };

    push("part_ids", normal_init({config_.max_parts, c}));
    push("input_proj.w", normal_init({c, c}));
    push("input_proj.b", Tensor::zeros({c}));
    push("t_embed.w1", normal_init({tf, tw}));
    push("t_embed.b1", Tensor::zeros({tw}));
    push("t_embed.w2", normal_init({tw, tw}));
    push("t_embed.b2", Tensor::zeros({tw}));

    for (int i = 0; i < config_.depth; ++i) {
        const std::string pre = "block." + std::to_string(i) + ".";
        // adaLN-zero: modulation starts at identity, gates at zero
        push(pre + "ada.w", Tensor::zeros({tw, 6 * c}));
        push(pre + "ada.b", Tensor::zeros({6 * c}));
        push(pre + "sa.wq", normal_init({c, c}));
        push(pre + "sa.bq", Tensor::zeros({c}));
        push(pre + "sa.wk", normal_init({c, c}));
        push(pre + "sa.wv", normal_init({c, c}));
        push(pre + "sa.bv", Tensor::zeros({c}));
        push(pre + "sa.wo", normal_init({c, c}));
        push(pre + "sa.bo", Tensor::zeros({c}));
        push(pre + "ca.wq", normal_init({c, c}));
        push(pre + "ca.bq", Tensor::zeros({c}));
        push(pre + "ca.wk", normal_init({dc, c}));
        push(pre + "ca.wv", normal_init({dc, c}));
        push(pre + "ca.bv", Tensor::zeros({c}));
        // cross path has no gate; its output projection starts at zero instead
        push(pre + "ca.wo", Tensor::zeros({c, c}));
        push(pre + "ca.bo", Tensor::zeros({c}));
        push(pre + "mlp.w1", normal_init({c, 4 * c}));
        push(pre + "mlp.b1", Tensor::zeros({4 * c}));
        push(pre + "mlp.w2", normal_init({4 * c, c}));
        push(pre + "mlp.b2", Tensor::zeros({c}));
    }

    // long skips: block i feeds block depth-1-i through concat + projection
    for (int i = 0; i < config_.depth / 2; ++i) {
        const int j = config_.depth - 1 - i;
        const std::string pre = "skip." + std::to_string(j) + ".";
        push(pre + "w", normal_init({2 * c, c}));
        push(pre + "b", Tensor::zeros({c}));
    }

    push("final.ada.w", Tensor::zeros({tw, 2 * c}));
    push("final.ada.b", Tensor::zeros({2 * c}));
    push("final.out.w", Tensor::zeros({c, c}));
    push("final.out.b", Tensor::zeros({c}));
}

Tensor& Denoiser::param(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::contract, "unknown parameter '" + name + "'");
    return params_[it->second].value;
}

const Tensor& Denoiser::param(const std::string& name) const {
    return const_cast<Denoiser*>(this)->param(name);
}

Denoiser::Bound Denoiser::bind(Graph& g) const {
    Bound b;
    b.vars.reserve(params_.size());
    for (const NamedParam& p : params_) b.vars.push_back(g.param(p.value));
    return b;
}

Var Denoiser::bound_param(const Bound& b, const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::contract, "unknown parameter '" + name + "'");
    return b.vars[it->second];
}

std::int64_t Denoiser::parameter_count() const {
    std::int64_t n = 0;
    for (const NamedParam& p : params_) n += p.value.numel();
    return n;
}

Var Denoiser::time_embedding(Graph& g, const Bound& b, double t) const {
    Var feats = g.constant(sinusoidal_time_features(t, config_.time_features));
    Var h = gelu(linear(feats, bound_param(b, "t_embed.w1"), bound_param(b, "t_embed.b1")));
    return linear(h, bound_param(b, "t_embed.w2"), bound_param(b, "t_embed.b2"));
}

namespace {

// x * (1 + scale) + shift, scale/shift broadcast over rows.
Var modulate(Var x, Var shift, Var scale_vec, Var ones) {
    return add_rowvec(mul_rowvec(x, add(scale_vec, ones)), shift);
}

} // namespace

Var Denoiser::run_block(Graph& g, const Bound& b, int block_index, Var h, Var t_embed,
                        Var cond) const {
    const std::int64_t c = config_.width;
    const std::string pre = "block." + std::to_string(block_index) + ".";
    const AttnLevel block_level = config_.levels()[static_cast<std::size_t>(block_index)];

    Var unit_gain = g.constant(Tensor::full({c}, 1.0));
    Var zero_bias = g.constant(Tensor::zeros({c}));
    Var ones = g.constant(Tensor::full({1, c}, 1.0));

    Var ada = linear(gelu(t_embed), bound_param(b, pre + "ada.w"), bound_param(b, pre + "ada.b"));
    Var shift_sa = slice_cols(ada, 0, c);
    Var scale_sa = slice_cols(ada, c, 2 * c);
    Var gate_sa = slice_cols(ada, 2 * c, 3 * c);
    Var shift_mlp = slice_cols(ada, 3 * c, 4 * c);
    Var scale_mlp = slice_cols(ada, 4 * c, 5 * c);
    Var gate_mlp = slice_cols(ada, 5 * c, 6 * c);

    AttentionParams sa{bound_param(b, pre + "sa.wq"), bound_param(b, pre + "sa.bq"),
                       bound_param(b, pre + "sa.wk"), bound_param(b, pre + "sa.wv"),
                       bound_param(b, pre + "sa.bv"), bound_param(b, pre + "sa.wo"),
                       bound_param(b, pre + "sa.bo"), config_.heads};
    AttentionParams ca{bound_param(b, pre + "ca.wq"), bound_param(b, pre + "ca.bq"),
                       bound_param(b, pre + "ca.wk"), bound_param(b, pre + "ca.wv"),
                       bound_param(b, pre + "ca.bv"), bound_param(b, pre + "ca.wo"),
                       bound_param(b, pre + "ca.bo"), config_.heads};

    // self-attention at this block's level
    Var x = modulate(layer_norm(h, unit_gain, zero_bias), shift_sa, scale_sa, ones);
    Var attn = block_level == AttnLevel::global
                   ? global_attention(x, sa)
                   : local_attention(x, config_.tokens_per_part, sa);
    h = add(h, mul_rowvec(attn, gate_sa));

    // condition injection at both levels
    Var xc = layer_norm(h, unit_gain, zero_bias);
    h = add(h, cross_attention(xc, cond, ca));

    // MLP
    Var xm = modulate(layer_norm(h, unit_gain, zero_bias), shift_mlp, scale_mlp, ones);
    Var mid = gelu(linear(xm, bound_param(b, pre + "mlp.w1"), bound_param(b, pre + "mlp.b1")));
    Var out = linear(mid, bound_param(b, pre + "mlp.w2"), bound_param(b, pre + "mlp.b2"));
    return add(h, mul_rowvec(out, gate_mlp));
}

Var Denoiser::forward(Graph& g, const Bound& b, Var zt, const std::vector<int>& slots, double t,
                      Var cond) const {
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::domain, "forward: t outside [0,1]");
    const std::int64_t c = config_.width;
    const Tensor& zv = g.value(zt);
    if (zv.cols() != c)
        fail(ErrorKind::shape, "forward: token width " + std::to_string(zv.cols()) +
                                   " does not match config width " + std::to_string(c));
    const std::int64_t n = static_cast<std::int64_t>(slots.size());
    if (n < 1 || n > config_.max_parts)
        fail(ErrorKind::capacity, "forward: part count " + std::to_string(n) +
                                      " outside [1, " + std::to_string(config_.max_parts) + "]");
    if (zv.rows() != n * config_.tokens_per_part)
        fail(ErrorKind::shape, "forward: rows " + std::to_string(zv.rows()) + " != N*K");
    if (g.value(cond).cols() != config_.cond_width)
        fail(ErrorKind::shape, "forward: condition width mismatch");

    Var h = linear(zt, bound_param(b, "input_proj.w"), bound_param(b, "input_proj.b"));
    h = add_part_ids(h, slots, bound_param(b, "part_ids"), config_.tokens_per_part);
    Var t_embed = time_embedding(g, b, t);

    const int half = config_.depth / 2;
    std::vector<Var> skip_stack;
    for (int i = 0; i < config_.depth; ++i) {
        if (i >= config_.depth - half) {
            Var skip = skip_stack.back();
            skip_stack.pop_back();
            const std::string pre = "skip." + std::to_string(i) + ".";
            h = linear(concat_cols({h, skip}), bound_param(b, pre + "w"),
                       bound_param(b, pre + "b"));
        }
        h = run_block(g, b, i, h, t_embed, cond);
        if (i < half) skip_stack.push_back(h);
    }

    // The output head modulates the raw residual stream rather than a
    // normalized copy: the velocity target scales like (z_t - z_0)/(1 - t),
    // so per-row magnitude must survive to the projection.
    Var ones = g.constant(Tensor::full({1, c}, 1.0));
    Var ada = linear(gelu(t_embed), bound_param(b, "final.ada.w"), bound_param(b, "final.ada.b"));
    Var shift = slice_cols(ada, 0, c);
    Var scale_vec = slice_cols(ada, c, 2 * c);
    Var x = modulate(h, shift, scale_vec, ones);
    return linear(x, bound_param(b, "final.out.w"), bound_param(b, "final.out.b"));
}

Tensor Denoiser::predict(const Tensor& zt, const std::vector<int>& slots, double t,
                         const Tensor& cond) const {
    Graph g;
    Bound b = bind(g);
    Var v = forward(g, b, g.constant(zt), slots, t, g.constant(cond));
    return g.value(v);
}

} // namespace partforge
