#include "partforge/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace partforge {

nlohmann::ordered_json CurationRecord::to_json() const {
    nlohmann::ordered_json j;
    j["asset_id"] = asset_id;
    j["source"] = source;
    j["part_count"] = part_count;
    j["has_texture"] = has_texture;
    j["max_pairwise_iou"] = max_pairwise_iou;
    j["verdict"] = verdict;
    return j;
}

CurationRecord CurationRecord::from_json(const nlohmann::ordered_json& j) {
    CurationRecord r;
    r.asset_id = j.at("asset_id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.part_count = j.at("part_count").get<int>();
    r.has_texture = j.at("has_texture").get<bool>();
    r.max_pairwise_iou = j.at("max_pairwise_iou").get<double>();
    r.verdict = j.at("verdict").get<std::string>();
    return r;
}

CanonicalAsset normalize_canonical(std::vector<TriMesh> parts, std::vector<std::string> labels) {
    CanonicalAsset asset;
    Aabb box;
    for (const TriMesh& part : parts) box.grow(part.bounds());
    double scale = 1.0;
    Vec3 translation{0, 0, 0};
    if (!box.empty()) {
        const Vec3 extent = box.extent();
        const double max_extent = std::max({extent[0], extent[1], extent[2]});
        scale = max_extent > 0.0 ? 2.0 * 0.99 / max_extent : 1.0;
        const Vec3 center = box.center();
        translation = {-center[0] * scale, -center[1] * scale, -center[2] * scale};
    }
    for (TriMesh& part : parts)
        for (Vec3& v : part.vertices) v = scale * v + translation;
    asset.parts = std::move(parts);
    asset.labels = std::move(labels);
    asset.scale = scale;
    asset.translation = translation;
    return asset;
}

CurationRecord curate(const std::vector<TriMesh>& parts, bool has_texture,
                      const CurationThresholds& thresholds, const std::string& asset_id,
                      const std::string& source) {
    CurationRecord record;
    record.asset_id = asset_id;
    record.source = source;
    record.part_count = static_cast<int>(parts.size());
    record.has_texture = has_texture;

    if (parts.empty()) {
        record.verdict = "rejected:no_parts";
        return record;
    }

    // IoU in canonical space: the shared normalization leaves overlap intact
    CanonicalAsset canonical = normalize_canonical(parts, {});
    std::vector<VoxelGrid> grids;
    grids.reserve(canonical.parts.size());
    for (const TriMesh& part : canonical.parts)
        grids.push_back(voxelize_solid(part, thresholds.voxel_resolution));
    double max_iou = 0.0;
    for (std::size_t i = 0; i < grids.size(); ++i)
        for (std::size_t j = i + 1; j < grids.size(); ++j) {
            const std::int64_t uni = grids[i].union_count(grids[j]);
            if (uni == 0) continue;
            max_iou = std::max(max_iou, static_cast<double>(grids[i].intersection_count(grids[j])) /
                                            static_cast<double>(uni));
        }
    record.max_pairwise_iou = max_iou;

    if (record.part_count >= thresholds.max_parts) {
        record.verdict = "rejected:part_count";
    } else if (max_iou >= thresholds.max_iou) {
        record.verdict = "rejected:iou";
    } else if (thresholds.require_texture && !has_texture) {
        record.verdict = "rejected:texture";
    } else {
        record.verdict = "kept";
    }
    return record;
}

AssetLatent encode_toy(const CanonicalAsset& asset, std::int64_t tokens_per_part,
                       std::int64_t width, std::uint64_t seed) {
    if (width < 3) fail(ErrorKind::config, "encode_toy: width must be >= 3");
    if (tokens_per_part < 1) fail(ErrorKind::config, "encode_toy: tokens_per_part must be >= 1");
    if (asset.parts.empty()) fail(ErrorKind::domain, "encode_toy: asset has no parts");

    AssetLatent latent;
    Rng base(seed);
    for (int p = 0; p < asset.part_count(); ++p) {
        const std::uint64_t part_seed = base.fork(static_cast<std::uint64_t>(p)).seed();
        PointSample samples = sample_surface(asset.parts[static_cast<std::size_t>(p)],
                                             static_cast<int>(tokens_per_part), part_seed);
        PartTokenSet tokens;
        tokens.slot = p;
        tokens.tokens = Tensor({tokens_per_part, width});
        for (std::int64_t i = 0; i < tokens_per_part; ++i)
            for (int a = 0; a < 3; ++a)
                tokens.tokens.at(i, a) = samples.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
        latent.parts.push_back(std::move(tokens));
    }
    return latent;
}

std::vector<PointSample> decode_latent(const AssetLatent& latent) {
    std::vector<PointSample> out;
    out.reserve(latent.parts.size());
    for (const PartTokenSet& part : latent.parts) {
        if (part.tokens.cols() < 3) fail(ErrorKind::shape, "decode_latent: width must be >= 3");
        PointSample s;
        for (std::int64_t i = 0; i < part.tokens.rows(); ++i)
            s.points.push_back({part.tokens.at(i, 0), part.tokens.at(i, 1), part.tokens.at(i, 2)});
        out.push_back(std::move(s));
    }
    return out;
}

Tensor silhouette(const CanonicalAsset& asset, int resolution) {
    if (resolution < 1) fail(ErrorKind::config, "silhouette resolution must be >= 1");
    Tensor img({resolution, resolution});
    const double pitch = 2.0 / resolution;
    for (const TriMesh& part : asset.parts) {
        for (const auto& f : part.faces) {
            const Vec3& a = part.vertices[static_cast<std::size_t>(f[0])];
            const Vec3& b = part.vertices[static_cast<std::size_t>(f[1])];
            const Vec3& c = part.vertices[static_cast<std::size_t>(f[2])];
            // xy-projection bounding box clipped to the image
            const double lox = std::min({a[0], b[0], c[0]}), hix = std::max({a[0], b[0], c[0]});
            const double loy = std::min({a[1], b[1], c[1]}), hiy = std::max({a[1], b[1], c[1]});
            const int j0 = std::max(0, static_cast<int>(std::floor((lox + 1.0) / pitch)));
            const int j1 = std::min(resolution - 1, static_cast<int>(std::floor((hix + 1.0) / pitch)));
            const int i0 = std::max(0, static_cast<int>(std::floor((loy + 1.0) / pitch)));
            const int i1 = std::min(resolution - 1, static_cast<int>(std::floor((hiy + 1.0) / pitch)));
            const double area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if (area2 == 0.0) continue; // edge-on triangle casts no area
            for (int i = i0; i <= i1; ++i) {
                const double y = -1.0 + (i + 0.5) * pitch;
                for (int j = j0; j <= j1; ++j) {
                    if (img.at(i, j) != 0.0) continue;
                    const double x = -1.0 + (j + 0.5) * pitch;
                    const double e0 = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
                    const double e1 = (c[0] - b[0]) * (y - b[1]) - (c[1] - b[1]) * (x - b[0]);
                    const double e2 = (a[0] - c[0]) * (y - c[1]) - (a[1] - c[1]) * (x - c[0]);
                    const bool inside = area2 > 0 ? (e0 >= 0 && e1 >= 0 && e2 >= 0)
                                                  : (e0 <= 0 && e1 <= 0 && e2 <= 0);
                    if (inside) img.at(i, j) = 1.0;
                }
            }
        }
    }
    return img;
}

ConditionTokens encode_condition(const CanonicalAsset& asset, std::int64_t cond_width) {
    constexpr int kResolution = 32;
    constexpr int kPatch = 4;
    constexpr int kGrid = kResolution / kPatch; // 8 x 8 = 64 tokens
    constexpr std::int64_t kPatchFeatures = kPatch * kPatch;

    Tensor img = silhouette(asset, kResolution);
    Tensor patches({kGrid * kGrid, kPatchFeatures});
    for (int pi = 0; pi < kGrid; ++pi)
        for (int pj = 0; pj < kGrid; ++pj)
            for (int di = 0; di < kPatch; ++di)
                for (int dj = 0; dj < kPatch; ++dj)
                    patches.at(pi * kGrid + pj, di * kPatch + dj) =
                        img.at(pi * kPatch + di, pj * kPatch + dj);

    // Fixed random projection: the frozen toy feature extractor. Seeded with a
    // constant so every run sees the same map.
    Rng rng(0x70a7c4e5u);
    Tensor proj({kPatchFeatures, cond_width});
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(kPatchFeatures));
    for (std::int64_t i = 0; i < proj.numel(); ++i) proj.at(i) = inv_sqrt * rng.normal();

    Tensor tokens({kGrid * kGrid, cond_width});
    for (std::int64_t i = 0; i < tokens.rows(); ++i)
        for (std::int64_t j = 0; j < cond_width; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < kPatchFeatures; ++k)
                acc += patches.at(i, k) * proj.at(k, j);
            tokens.at(i, j) = acc;
        }
    return ConditionTokens{std::move(tokens)};
}

} // namespace partforge
