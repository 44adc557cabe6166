#pragma once

#include <vector>

#include "partforge/graph.hpp"
#include "partforge/rng.hpp"
#include "partforge/tensor.hpp"

namespace partforge {

// K x C token matrix bound to one part slot.
struct PartTokenSet {
    Tensor tokens;
    int slot = 0;
};

// Ordered list of part token sets; conceptually the concatenation NK x C.
struct AssetLatent {
    std::vector<PartTokenSet> parts;

    int part_count() const { return static_cast<int>(parts.size()); }
    std::int64_t tokens_per_part() const { return parts.empty() ? 0 : parts[0].tokens.rows(); }
    std::int64_t width() const { return parts.empty() ? 0 : parts[0].tokens.cols(); }
    std::vector<int> slots() const;

    // Enforces: nonempty, uniform K x C blocks, slots a permutation of 0..N-1.
    void validate(int max_parts) const;
};

// Learnable per-slot embedding table, rows are e_0..e_{N_max-1}.
struct PartIdentityTable {
    Tensor embeddings; // N_max x C

    static PartIdentityTable init(int max_parts, std::int64_t width, Rng& rng, double std_dev = 0.02);
    int capacity() const { return static_cast<int>(embeddings.rows()); }
};

// One noise level per asset per step; never per-part.
struct NoiseLevel {
    double t;
    explicit NoiseLevel(double t_);
};

// tokens of the part in slot i become tokens + e_i, broadcast over the K rows.
AssetLatent add_part_ids(const AssetLatent& asset, const PartIdentityTable& table);

// Graph-level form used inside the denoiser: z is the NK x C concatenation and
// slots[b] names the identity row added to block b. Differentiable into table.
Var add_part_ids(Var z, const std::vector<int>& slots, Var table, std::int64_t tokens_per_part);

// Uniform random permutation of the part order; slots are reassigned 0..N-1 in
// the new order, so slot i's identity attaches to whichever part lands there.
AssetLatent shuffle_parts(const AssetLatent& asset, Rng& rng);

Tensor concat(const AssetLatent& asset);                       // NK x C
AssetLatent split(const Tensor& z, int parts, std::int64_t tokens_per_part);

// Elementwise t*z0 + (1-t)*eps.
Tensor interpolate(const Tensor& z0, const Tensor& eps, NoiseLevel t);

} // namespace partforge
