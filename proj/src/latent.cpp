#include "partforge/latent.hpp"

#include <algorithm>
#include <numeric>

namespace partforge {

std::vector<int> AssetLatent::slots() const {
    std::vector<int> s;
    s.reserve(parts.size());
    for (const PartTokenSet& p : parts) s.push_back(p.slot);
    return s;
}

void AssetLatent::validate(int max_parts) const {
    if (parts.empty()) fail(ErrorKind::domain, "asset latent has no parts");
    if (part_count() > max_parts)
        fail(ErrorKind::capacity, "asset has " + std::to_string(part_count()) +
                                      " parts, max is " + std::to_string(max_parts));
    const std::int64_t k = parts[0].tokens.rows();
    const std::int64_t c = parts[0].tokens.cols();
    std::vector<char> seen(parts.size(), 0);
    for (const PartTokenSet& p : parts) {
        if (p.tokens.rows() != k || p.tokens.cols() != c)
            fail(ErrorKind::shape, "part token blocks are not uniform");
        if (p.slot < 0 || p.slot >= part_count() || seen[static_cast<std::size_t>(p.slot)])
            fail(ErrorKind::domain, "slots are not a permutation of 0..N-1");
        seen[static_cast<std::size_t>(p.slot)] = 1;
    }
}

PartIdentityTable PartIdentityTable::init(int max_parts, std::int64_t width, Rng& rng,
                                          double std_dev) {
    Tensor e({max_parts, width});
    for (std::int64_t i = 0; i < e.numel(); ++i) e.at(i) = std_dev * rng.normal();
    e.requires_grad = true;
    return PartIdentityTable{std::move(e)};
}

NoiseLevel::NoiseLevel(double t_) : t(t_) {
    if (!(t >= 0.0 && t <= 1.0))
        fail(ErrorKind::domain, "noise level t=" + std::to_string(t_) + " outside [0,1]");
}

AssetLatent add_part_ids(const AssetLatent& asset, const PartIdentityTable& table) {
    AssetLatent out = asset;
    for (PartTokenSet& p : out.parts) {
        if (p.slot >= table.capacity())
            fail(ErrorKind::capacity, "part slot " + std::to_string(p.slot) +
                                          " exceeds identity table capacity " +
                                          std::to_string(table.capacity()));
        const std::int64_t c = p.tokens.cols();
        for (std::int64_t i = 0; i < p.tokens.rows(); ++i)
            for (std::int64_t j = 0; j < c; ++j)
                p.tokens.at(i, j) += table.embeddings.at(p.slot, j);
    }
    return out;
}

Var add_part_ids(Var z, const std::vector<int>& slots, Var table, std::int64_t tokens_per_part) {
    Graph& g = *z.graph;
    const std::int64_t nk = g.value(z).rows();
    const std::int64_t n = static_cast<std::int64_t>(slots.size());
    if (n * tokens_per_part != nk)
        fail(ErrorKind::shape, "add_part_ids: slot count does not partition the token rows");
    const std::int64_t cap = g.value(table).rows();
    std::vector<Var> blocks;
    blocks.reserve(static_cast<std::size_t>(n));
    for (std::int64_t b = 0; b < n; ++b) {
        const int slot = slots[static_cast<std::size_t>(b)];
        if (slot < 0 || slot >= cap)
            fail(ErrorKind::capacity, "part slot " + std::to_string(slot) +
                                          " exceeds identity table capacity " + std::to_string(cap));
        Var block = slice_rows(z, b * tokens_per_part, (b + 1) * tokens_per_part);
        Var e = slice_rows(table, slot, slot + 1);
        blocks.push_back(add_rowvec(block, e));
    }
    return n == 1 ? blocks[0] : concat_rows(blocks);
}

AssetLatent shuffle_parts(const AssetLatent& asset, Rng& rng) {
    AssetLatent out = asset;
    rng.shuffle(out.parts);
    for (int i = 0; i < out.part_count(); ++i) out.parts[static_cast<std::size_t>(i)].slot = i;
    return out;
}

Tensor concat(const AssetLatent& asset) {
    if (asset.parts.empty()) fail(ErrorKind::domain, "concat: asset latent has no parts");
    const std::int64_t k = asset.tokens_per_part();
    const std::int64_t c = asset.width();
    Tensor z({asset.part_count() * k, c});
    std::int64_t row = 0;
    for (const PartTokenSet& p : asset.parts) {
        if (p.tokens.rows() != k || p.tokens.cols() != c)
            fail(ErrorKind::shape, "concat: part token blocks are not uniform");
        for (std::int64_t i = 0; i < k; ++i)
            for (std::int64_t j = 0; j < c; ++j) z.at(row + i, j) = p.tokens.at(i, j);
        row += k;
    }
    return z;
}

AssetLatent split(const Tensor& z, int parts, std::int64_t tokens_per_part) {
    if (parts <= 0) fail(ErrorKind::domain, "split: part count must be positive");
    if (z.rows() != parts * tokens_per_part)
        fail(ErrorKind::shape, "split: " + z.shape_str() + " does not hold " +
                                   std::to_string(parts) + " blocks of " +
                                   std::to_string(tokens_per_part) + " rows");
    AssetLatent out;
    const std::int64_t c = z.cols();
    for (int b = 0; b < parts; ++b) {
        PartTokenSet p;
        p.slot = b;
        p.tokens = Tensor({tokens_per_part, c});
        for (std::int64_t i = 0; i < tokens_per_part; ++i)
            for (std::int64_t j = 0; j < c; ++j)
                p.tokens.at(i, j) = z.at(b * tokens_per_part + i, j);
        out.parts.push_back(std::move(p));
    }
    return out;
}

Tensor interpolate(const Tensor& z0, const Tensor& eps, NoiseLevel t) {
    if (!z0.same_shape(eps))
        fail(ErrorKind::shape, "interpolate: " + z0.shape_str() + " vs " + eps.shape_str());
    Tensor out = z0;
    for (std::int64_t i = 0; i < out.numel(); ++i)
        out.at(i) = t.t * z0.at(i) + (1.0 - t.t) * eps.at(i);
    return out;
}

} // namespace partforge
