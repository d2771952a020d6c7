#include "duplex/timebase.hpp"

namespace duplex {

std::string to_string(Speaker s) {
    switch (s) {
        case Speaker::None: return "none";
        case Speaker::User: return "user";
        case Speaker::ThirdParty: return "third_party";
        case Speaker::AssistantEcho: return "assistant_echo";
    }
    return "none";
}

Speaker speaker_from_string(const std::string& s) {
    if (s == "none") return Speaker::None;
    if (s == "user") return Speaker::User;
    if (s == "third_party") return Speaker::ThirdParty;
    if (s == "assistant_echo") return Speaker::AssistantEcho;
    throw std::invalid_argument("unknown speaker: " + s);
}

bool frame_valid(const Frame& f) {
    if (f.activity < 0.0 || f.activity > 1.0) return false;
    if (f.relevance < 0.0 || f.relevance > 1.0) return false;
    if (f.energy < 0.0) return false;
    if (f.activity == 0.0 && f.speaker != Speaker::None) return false;
    return true;
}

std::string to_string(TokenKind k) {
    switch (k) {
        case TokenKind::Text: return "text";
        case TokenKind::Think: return "think";
        case TokenKind::Shift: return "shift";
        case TokenKind::Listen: return "listen";
        case TokenKind::Speak: return "speak";
    }
    return "think";
}

TokenKind token_kind_from_string(const std::string& s) {
    if (s == "text") return TokenKind::Text;
    if (s == "think") return TokenKind::Think;
    if (s == "shift") return TokenKind::Shift;
    if (s == "listen") return TokenKind::Listen;
    if (s == "speak") return TokenKind::Speak;
    throw std::invalid_argument("unknown token kind: " + s);
}

std::string to_string(StatePhase p) {
    return p == StatePhase::Listening ? "listening" : "speaking";
}

StatePhase phase_from_string(const std::string& s) {
    if (s == "listening") return StatePhase::Listening;
    if (s == "speaking") return StatePhase::Speaking;
    throw std::invalid_argument("unknown state phase: " + s);
}

void validate(const TimingConfig& cfg) {
    if (cfg.block_ms <= 0) throw std::invalid_argument("block_ms must be positive");
    if (cfg.block_ms % kFrameMs != 0)
        throw std::invalid_argument("block_ms must be a multiple of the 10 ms frame");
    if (cfg.n_text <= 0) throw std::invalid_argument("n_text must be positive");
    if (cfg.m_speech < 0) throw std::invalid_argument("m_speech must be non-negative");
    if (cfg.speech_token_ms <= 0) throw std::invalid_argument("speech_token_ms must be positive");
}

std::int64_t onset_latency_ms(const TimingConfig& cfg) {
    return static_cast<std::int64_t>(cfg.n_text) * cfg.block_ms;
}

std::int64_t speech_chunk_duration_ms(const TimingConfig& cfg) {
    return static_cast<std::int64_t>(cfg.m_speech) * cfg.speech_token_ms;
}

double blocks_per_second(const TimingConfig& cfg) {
    if (cfg.block_ms <= 0) throw std::invalid_argument("block_ms must be positive");
    return 1000.0 / static_cast<double>(cfg.block_ms);
}

void validate(const TimeBlock& block, const TimingConfig& cfg) {
    const auto n = static_cast<std::size_t>(cfg.frames_per_block());
    if (block.env_frames.size() != n || block.asst_frames.size() != n)
        throw std::invalid_argument("time block must carry exactly " + std::to_string(n) +
                                    " frames per stream");
    for (const auto& f : block.env_frames)
        if (!frame_valid(f)) throw std::invalid_argument("invalid env frame in block");
    for (const auto& f : block.asst_frames)
        if (!frame_valid(f)) throw std::invalid_argument("invalid asst frame in block");
}

}  // namespace duplex
