#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "partforge/denoiser.hpp"

namespace partforge {

// Checkpoint file layout:
//   bytes 0..3   magic "PFCP"
//   bytes 4..7   format version, little-endian u32
//   bytes 8..15  JSON header byte length, little-endian u64
//   JSON header  config, seed, step, tensor names + shapes in payload order
//   payload      flat little-endian float32, tensors in header order
struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::int64_t step = 0;
};

struct Checkpoint {
    DenoiserConfig config;
    CheckpointMeta meta;
    std::vector<NamedParam> model;           // names without the "model." prefix
    std::vector<NamedParam> extras;          // e.g. "adam_m.<param>", "adam_v.<param>"
    nlohmann::ordered_json user;             // free-form section, round-tripped verbatim
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::ordered_json config_to_json(const DenoiserConfig& config);
DenoiserConfig config_from_json(const nlohmann::ordered_json& j);

} // namespace partforge
