#include "partforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "partforge/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace partforge {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void append_tensor_list(nlohmann::ordered_json& list, const std::vector<NamedParam>& tensors,
                        const std::string& prefix) {
    for (const NamedParam& p : tensors) {
        nlohmann::ordered_json entry;
        entry["name"] = prefix + p.name;
        entry["shape"] = p.value.shape();
        list.push_back(entry);
    }
}

void write_payload(std::ofstream& out, const std::vector<NamedParam>& tensors) {
    std::vector<float> buf;
    for (const NamedParam& p : tensors) {
        buf.resize(static_cast<std::size_t>(p.value.numel()));
        for (std::int64_t i = 0; i < p.value.numel(); ++i)
            buf[static_cast<std::size_t>(i)] = static_cast<float>(p.value.at(i));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
}

} // namespace

nlohmann::ordered_json config_to_json(const DenoiserConfig& c) {
    nlohmann::ordered_json j;
    j["depth"] = c.depth;
    j["width"] = c.width;
    j["heads"] = c.heads;
    j["tokens_per_part"] = c.tokens_per_part;
    j["max_parts"] = c.max_parts;
    j["cond_width"] = c.cond_width;
    j["time_features"] = c.time_features;
    j["time_embed_width"] = c.time_embed_width;
    j["schedule"] = c.schedule;
    j["id_injection"] = c.id_injection;
    j["cond_injection"] = c.cond_injection;
    return j;
}

DenoiserConfig config_from_json(const nlohmann::ordered_json& j) {
    DenoiserConfig c;
    c.depth = j.at("depth").get<int>();
    c.width = j.at("width").get<std::int64_t>();
    c.heads = j.at("heads").get<int>();
    c.tokens_per_part = j.at("tokens_per_part").get<std::int64_t>();
    c.max_parts = j.at("max_parts").get<int>();
    c.cond_width = j.at("cond_width").get<std::int64_t>();
    c.time_features = j.at("time_features").get<std::int64_t>();
    c.time_embed_width = j.at("time_embed_width").get<std::int64_t>();
    c.schedule = j.at("schedule").get<std::string>();
    c.id_injection = j.at("id_injection").get<std::string>();
    c.cond_injection = j.at("cond_injection").get<std::string>();
    c.validate();
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::ordered_json header;
    header["format"] = "partforge-checkpoint";
    header["config"] = config_to_json(ckpt.config);
    header["seed"] = ckpt.meta.seed;
    header["step"] = ckpt.meta.step;
    header["tensors"] = nlohmann::ordered_json::array();
    append_tensor_list(header["tensors"], ckpt.model, "model.");
    append_tensor_list(header["tensors"], ckpt.extras, "");
    if (!ckpt.user.is_null()) header["user"] = ckpt.user;

    const std::string json_text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    std::uint64_t len = json_text.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(json_text.data(), static_cast<std::streamsize>(json_text.size()));
    write_payload(out, ckpt.model);
    write_payload(out, ckpt.extras);
    if (!out) fail(ErrorKind::io, "failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open checkpoint: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        fail(ErrorKind::parse, "not a partforge checkpoint: " + path);
    if (version != kVersion)
        fail(ErrorKind::unsupported, "checkpoint version " + std::to_string(version));

    std::string json_text(len, '\0');
    in.read(json_text.data(), static_cast<std::streamsize>(len));
    if (!in) fail(ErrorKind::parse, "truncated checkpoint header: " + path);
    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("bad checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));
    ckpt.meta.seed = header.at("seed").get<std::uint64_t>();
    ckpt.meta.step = header.at("step").get<std::int64_t>();
    if (header.contains("user")) ckpt.user = header.at("user");

    std::vector<float> buf;
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<std::int64_t> shape = entry.at("shape").get<std::vector<std::int64_t>>();
        Tensor t(shape);
        buf.resize(static_cast<std::size_t>(t.numel()));
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) fail(ErrorKind::parse, "truncated checkpoint payload at tensor " + name);
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t.at(i) = static_cast<double>(buf[static_cast<std::size_t>(i)]);
        if (name.rfind("model.", 0) == 0)
            ckpt.model.push_back({name.substr(6), std::move(t)});
        else
            ckpt.extras.push_back({name, std::move(t)});
    }
    return ckpt;
}

} // namespace partforge
