#include "sbgen/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include <json.hpp>

#include "sbgen/util.hpp"

namespace sbgen {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void append_u32(std::string& out, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void append_u64(std::string& out, uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
    return {{"n_layers", cfg.n_layers},   {"n_heads", cfg.n_heads},
            {"d_model", cfg.d_model},     {"d_ff", cfg.d_ff},
            {"context_window", cfg.context_window}, {"vocab_size", cfg.vocab_size},
            {"dropout", cfg.dropout}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.d_model = j.at("d_model").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.context_window = j.at("context_window").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParameters& params,
                     const Vocabulary& vocab) {
    nlohmann::ordered_json header;
    header["model"] = config_to_json(params.config);
    header["vocab"] = vocab.words();
    header["vocab_hash"] = to_hex(vocab.hash());

    nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
    std::string payload;
    params.for_each([&manifest, &payload](const std::string& name, const Tensor& t) {
        manifest.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
        const size_t bytes = t.data.size() * sizeof(double);
        const size_t at = payload.size();
        payload.resize(at + bytes);
        std::memcpy(payload.data() + at, t.data.data(), bytes);
    });
    header["tensors"] = std::move(manifest);

    const std::string header_text = header.dump();
    std::string blob;
    blob.reserve(16 + header_text.size() + payload.size());
    blob.append(kMagic, 4);
    append_u32(blob, kVersion);
    append_u64(blob, header_text.size());
    blob += header_text;
    blob += payload;

    atomic_write_file(path, blob);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const std::string blob = read_file(path);
    if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    uint32_t version = 0;
    std::memcpy(&version, blob.data() + 4, 4);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    uint64_t header_len = 0;
    std::memcpy(&header_len, blob.data() + 8, 8);
    if (16 + header_len > blob.size()) {
        throw std::runtime_error("checkpoint: truncated header in " + path);
    }
    const nlohmann::json header = nlohmann::json::parse(blob.substr(16, header_len));

    LoadedCheckpoint out{
        ModelParameters::zeros(config_from_json(header.at("model"))),
        Vocabulary::from_words(header.at("vocab").get<std::vector<std::string>>()),
    };
    if (to_hex(out.vocab.hash()) != header.at("vocab_hash").get<std::string>()) {
        throw std::runtime_error("checkpoint: vocabulary hash mismatch in " + path);
    }

    size_t offset = 16 + header_len;
    size_t manifest_idx = 0;
    const nlohmann::json& manifest = header.at("tensors");
    out.params.for_each([&](const std::string& name, Tensor& t) {
        if (manifest_idx >= manifest.size()) {
            throw std::runtime_error("checkpoint: tensor manifest too short");
        }
        const nlohmann::json& entry = manifest[manifest_idx++];
        if (entry.at("name").get<std::string>() != name ||
            entry.at("rows").get<int>() != t.rows || entry.at("cols").get<int>() != t.cols) {
            throw std::runtime_error("checkpoint: tensor '" + name + "' shape mismatch");
        }
        const size_t bytes = t.data.size() * sizeof(double);
        if (offset + bytes > blob.size()) {
            throw std::runtime_error("checkpoint: truncated tensor data");
        }
        std::memcpy(t.data.data(), blob.data() + offset, bytes);
        offset += bytes;
    });
    if (offset != blob.size() || manifest_idx != manifest.size()) {
        throw std::runtime_error("checkpoint: trailing or missing data in " + path);
    }
    return out;
}

}  // namespace sbgen
