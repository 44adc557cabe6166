#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "partforge/denoiser.hpp"
#include "partforge/geometry.hpp"
#include "partforge/latent.hpp"

namespace partforge {

// Appendix-A-style filters; both bounds are exclusive ("fewer than", "less than").
struct CurationThresholds {
    int max_parts = 16;
    double max_iou = 0.1;
    bool require_texture = false;
    int voxel_resolution = 64;
};

struct CurationRecord {
    std::string asset_id;
    std::string source;
    int part_count = 0;
    bool has_texture = false;
    double max_pairwise_iou = 0.0;
    std::string verdict; // "kept" or "rejected:<reason>"

    bool kept() const { return verdict == "kept"; }
    nlohmann::ordered_json to_json() const;
    static CurationRecord from_json(const nlohmann::ordered_json& j);
};

// All parts in one shared frame after a single uniform scale + translation.
struct CanonicalAsset {
    std::vector<TriMesh> parts;
    std::vector<std::string> labels;
    double scale = 1.0;
    Vec3 translation{0, 0, 0};

    int part_count() const { return static_cast<int>(parts.size()); }
};

// Uniform map of the union AABB into [-1,1]^3 with a 1% margin; every part
// receives the same transform, parts are never individually recentered.
CanonicalAsset normalize_canonical(std::vector<TriMesh> parts, std::vector<std::string> labels);

// Part count + max pairwise voxel IoU in canonical space, then thresholds.
CurationRecord curate(const std::vector<TriMesh>& parts, bool has_texture,
                      const CurationThresholds& thresholds, const std::string& asset_id,
                      const std::string& source);

// ---------------------------------------------------------------------------
// Toy asset generation (desk-scale stand-in for mined GLTF parts)
// ---------------------------------------------------------------------------

enum class ToyKind { stacked_boxes, spheres_on_rod, l_bracket, tableau };

ToyKind toy_kind_from_string(const std::string& name);
std::string to_string(ToyKind kind);

struct ToySpec {
    ToyKind kind = ToyKind::stacked_boxes;
    int parts = 2;
    std::uint64_t seed = 0;
};

// Deterministic per spec; parts are watertight primitives with pairwise IoU
// under the curation bound by construction.
CanonicalAsset generate_toy(const ToySpec& spec);

// Watertight primitives used by the generators (and handy for fixtures).
TriMesh make_box(const Vec3& center, const Vec3& half_extents);
TriMesh make_uv_sphere(const Vec3& center, double radius, int segments = 12, int rings = 8);
TriMesh make_cylinder(const Vec3& center, double radius, double half_height, int segments = 12);

// ---------------------------------------------------------------------------
// Desk-scale latent and condition encoders (stand-ins for the out-of-scope VAE)
// ---------------------------------------------------------------------------

// Z0 tokens are K area-weighted surface samples per part, coordinates in the
// first 3 channels, zero-padded to `width`. Slots follow part order.
AssetLatent encode_toy(const CanonicalAsset& asset, std::int64_t tokens_per_part,
                       std::int64_t width, std::uint64_t seed);

// Read the first 3 channels of each part back as points.
std::vector<PointSample> decode_latent(const AssetLatent& latent);

// Orthographic +z silhouette over [-1,1]^2; row i is y, column j is x.
// resolution x resolution, entries 0/1.
Tensor silhouette(const CanonicalAsset& asset, int resolution = 32);

// Silhouette split into 4x4 patches, each patch projected to cond_width by a
// fixed seeded random map (the frozen stand-in for an image feature encoder).
ConditionTokens encode_condition(const CanonicalAsset& asset, std::int64_t cond_width);

} // namespace partforge
