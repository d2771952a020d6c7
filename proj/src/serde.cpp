#include "duplex/serde.hpp"

namespace duplex {

void to_json(json& j, const Token& t) {
    j = json{{"kind", to_string(t.kind)}};
    if (t.kind == TokenKind::Text) j["symbol"] = t.symbol;
}

void from_json(const json& j, Token& t) {
    reject_unknown_keys(j, {"kind", "symbol"}, "token");
    t.kind = token_kind_from_string(j.at("kind").get<std::string>());
    t.symbol = t.kind == TokenKind::Text ? j.at("symbol").get<int>() : 0;
    t.block_index = 0;
}

void to_json(json& j, const Frame& f) {
    j = json{{"t", f.t_index},
             {"activity", f.activity},
             {"speaker", to_string(f.speaker)},
             {"relevance", f.relevance},
             {"energy", f.energy}};
}

void from_json(const json& j, Frame& f) {
    reject_unknown_keys(j, {"t", "activity", "speaker", "relevance", "energy"}, "frame");
    f.t_index = j.at("t").get<std::int64_t>();
    f.activity = j.at("activity").get<double>();
    f.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    f.relevance = j.at("relevance").get<double>();
    f.energy = j.at("energy").get<double>();
}

void to_json(json& j, const TimingConfig& cfg) {
    j = json{{"block_ms", cfg.block_ms},
             {"n_text", cfg.n_text},
             {"m_speech", cfg.m_speech},
             {"speech_token_ms", cfg.speech_token_ms}};
}

void from_json(const json& j, TimingConfig& cfg) {
    reject_unknown_keys(j, {"block_ms", "n_text", "m_speech", "speech_token_ms"}, "timing");
    cfg.block_ms = j.at("block_ms").get<int>();
    cfg.n_text = j.at("n_text").get<int>();
    cfg.m_speech = j.at("m_speech").get<int>();
    cfg.speech_token_ms = j.at("speech_token_ms").get<int>();
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

void check_schema_version(const json& j, const std::string& context) {
    const int v = j.value("schema_version", -1);
    if (v < 0) throw ConfigError(context + ": missing schema_version");
    if (v > kSchemaVersion)
        throw ConfigError(context + ": schema_version " + std::to_string(v) +
                          " is newer than supported " + std::to_string(kSchemaVersion));
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace duplex
