#include "demn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "demn/error.hpp"

namespace demn {

namespace {

constexpr std::string_view kMagic = "DEMNCKPT";

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

nlohmann::json ablation_json(const AblationConfig& a) {
    return {{"deem", a.deem},
            {"deeav", a.deeav},
            {"distillation", a.distillation},
            {"exp_aware_climax", a.exp_aware_climax},
            {"exp_aware_option", a.exp_aware_option},
            {"features", features_string(a.features)},
            {"turns", a.turns()}};
}

AblationConfig ablation_from_json(const nlohmann::json& j) {
    AblationConfig a;
    a.deem = j.at("deem").get<bool>();
    a.deeav = j.at("deeav").get<bool>();
    a.distillation = j.at("distillation").get<bool>();
    a.exp_aware_climax = j.at("exp_aware_climax").get<bool>();
    a.exp_aware_option = j.at("exp_aware_option").get<bool>();
    a.features = parse_features(j.at("features").get<std::string>());
    return a;
}

std::vector<std::size_t> frozen_indices(const std::vector<std::uint8_t>& flags) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i]) out.push_back(i);
    return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

nlohmann::json to_json(const TrainConfig& c) {
    const ModelConfig& m = c.model;
    return {{"batch_size", c.batch_size},
            {"lr", c.lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"max_epochs", c.max_epochs},
            {"seed", c.seed},
            {"hidden", m.hidden},
            {"mlp_hidden", m.mlp_hidden},
            {"d_pos", m.embedding.d_pos},
            {"d_ner", m.embedding.d_ner},
            {"d_rel", m.embedding.d_rel},
            {"pos_table", m.embedding.tables.pos},
            {"ner_table", m.embedding.tables.ner},
            {"rel_table", m.embedding.tables.rel},
            {"dropout_word", m.dropout_word},
            {"dropout_memory", m.dropout_memory},
            {"l2", m.l2},
            {"ablation", ablation_json(m.ablation)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    ModelConfig& m = c.model;
    m.hidden = j.at("hidden").get<std::size_t>();
    m.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    m.embedding.d_pos = j.at("d_pos").get<std::size_t>();
    m.embedding.d_ner = j.at("d_ner").get<std::size_t>();
    m.embedding.d_rel = j.at("d_rel").get<std::size_t>();
    m.embedding.tables.pos = j.at("pos_table").get<std::size_t>();
    m.embedding.tables.ner = j.at("ner_table").get<std::size_t>();
    m.embedding.tables.rel = j.at("rel_table").get<std::size_t>();
    m.dropout_word = j.at("dropout_word").get<double>();
    m.dropout_memory = j.at("dropout_memory").get<double>();
    m.l2 = j.at("l2").get<double>();
    m.ablation = ablation_from_json(j.at("ablation"));
    return c;
}

std::string encode_checkpoint(const Model& model, const data::Vocab& vocab, const CheckpointMeta& meta) {
    nlohmann::json params = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& p : model.params()) {
        params.push_back({{"name", p->name},
                          {"shape", p->value.shape()},
                          {"offset", offset},
                          {"frozen_rows", frozen_indices(p->frozen_rows)}});
        offset += p->value.size();
    }
    nlohmann::json manifest = {{"format", "demn-checkpoint"},
                               {"version", kCheckpointVersion},
                               {"config", to_json(meta.config)},
                               {"epoch", meta.epoch},
                               {"best_dev_acc", meta.best_dev_acc},
                               {"turns", model.config().ablation.turns()},
                               {"param_count", model.params().scalar_count()},
                               {"vocab", vocab.tokens},
                               {"params", params}};
    const std::string text = manifest.dump();

    std::string out(kMagic);
    put_u32(out, kCheckpointVersion);
    put_u64(out, text.size());
    out += text;
    out.reserve(out.size() + offset * 8 + 8);
    for (const auto& p : model.params())
        for (double x : p->value.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    put_u64(out, fnv1a64(out));
    return out;
}

namespace {

nlohmann::json parse_header(std::string_view bytes, std::size_t& payload_at) {
    if (bytes.size() < kMagic.size() + 12 || bytes.substr(0, kMagic.size()) != kMagic)
        throw Error(ErrorKind::bad_format, "not a checkpoint file");
    const std::uint32_t version = get_u32(bytes, kMagic.size());
    if (version != kCheckpointVersion)
        throw Error(ErrorKind::bad_format, "unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t len = get_u64(bytes, kMagic.size() + 4);
    const std::size_t at = kMagic.size() + 12;
    if (len > bytes.size() - at) throw Error(ErrorKind::checksum_mismatch, "manifest runs past end of file");
    payload_at = at + len;
    try {
        return nlohmann::json::parse(bytes.substr(at, len));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::checksum_mismatch, std::string("manifest unreadable: ") + e.what());
    }
}

}  // namespace

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8) throw Error(ErrorKind::checksum_mismatch, "file too short");
    const std::string_view body(bytes.data(), bytes.size() - 8);
    if (fnv1a64(body) != get_u64(bytes, bytes.size() - 8))
        throw Error(ErrorKind::checksum_mismatch, "checkpoint checksum does not match its contents");

    std::size_t payload_at = 0;
    const nlohmann::json manifest = parse_header(body, payload_at);

    LoadedCheckpoint out;
    out.meta.config = train_config_from_json(manifest.at("config"));
    out.meta.epoch = manifest.at("epoch").get<std::size_t>();
    out.meta.best_dev_acc = manifest.at("best_dev_acc").get<double>();

    auto read_tensor = [&](const nlohmann::json& entry) {
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        const std::size_t at = payload_at + 8 * entry.at("offset").get<std::size_t>();
        if (at + 8 * n > body.size()) throw Error(ErrorKind::bad_format, "payload shorter than manifest");
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = std::bit_cast<double>(get_u64(body, at + 8 * i));
        return Tensor(shape, std::move(values));
    };
    auto frozen_flags = [](const nlohmann::json& entry, std::size_t rows) {
        std::vector<std::uint8_t> flags(rows, 0);
        for (std::size_t r : entry.at("frozen_rows").get<std::vector<std::size_t>>()) flags.at(r) = 1;
        return flags;
    };

    const nlohmann::json* word = nullptr;
    for (const auto& entry : manifest.at("params"))
        if (entry.at("name") == "embed.word") word = &entry;
    if (!word) throw Error(ErrorKind::bad_format, "checkpoint has no word table");
    Tensor table = read_tensor(*word);
    const std::size_t rows = table.rows();
    out.vocab = data::vocab_from_tokens(manifest.at("vocab").get<std::vector<std::string>>(), std::move(table),
                                        frozen_flags(*word, rows));

    out.model = std::make_unique<Model>(out.meta.config.model, out.vocab, out.meta.config.seed);
    const auto& entries = manifest.at("params");
    if (entries.size() != out.model->params().size())
        throw Error(ErrorKind::bad_format, "parameter table does not match the stored configuration");
    for (const auto& entry : entries) {
        Parameter& p = out.model->params().get(entry.at("name").get<std::string>());
        Tensor value = read_tensor(entry);
        if (!value.same_shape(p.value)) throw Error(ErrorKind::bad_format, "shape mismatch for " + p.name);
        p.value = std::move(value);
        p.frozen_rows = entry.at("frozen_rows").empty() ? std::vector<std::uint8_t>{}
                                                        : frozen_flags(entry, p.value.rows());
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const data::Vocab& vocab,
                     const CheckpointMeta& meta) {
    const std::string bytes = encode_checkpoint(model, vocab, meta);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(slurp(path)); }

nlohmann::json read_manifest(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    std::size_t payload_at = 0;
    return parse_header(bytes, payload_at);
}

}  // namespace demn
