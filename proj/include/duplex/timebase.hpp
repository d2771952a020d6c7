#ifndef DUPLEX_TIMEBASE_HPP
#define DUPLEX_TIMEBASE_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace duplex {

// All durations are integer milliseconds; block boundaries are exact.
constexpr int kFrameMs = 10;  // atomic 100 Hz frame

enum class Speaker { None, User, ThirdParty, AssistantEcho };

std::string to_string(Speaker s);
Speaker speaker_from_string(const std::string& s);

// 10 ms audio-proxy unit. Symbolic features stand in for acoustic content.
struct Frame {
    std::int64_t t_index = 0;   // 10 ms units since conversation start
    double activity = 0.0;      // voice-activity proxy in [0,1]
    Speaker speaker = Speaker::None;
    double relevance = 0.0;     // semantic relatedness in [0,1]
    double energy = 0.0;        // >= 0; echo frames carry scaled energy here

    bool operator==(const Frame&) const = default;
};

// activity == 0 implies speaker == None
bool frame_valid(const Frame& f);

enum class TokenKind { Text, Think, Shift, Listen, Speak };

std::string to_string(TokenKind k);
TokenKind token_kind_from_string(const std::string& s);

struct Token {
    TokenKind kind = TokenKind::Think;
    int symbol = 0;  // text symbol id; 0 is the blank symbol
    std::int64_t block_index = 0;

    static Token text(int symbol, std::int64_t block = 0) { return {TokenKind::Text, symbol, block}; }
    static Token think(std::int64_t block = 0) { return {TokenKind::Think, 0, block}; }
    static Token shift(std::int64_t block = 0) { return {TokenKind::Shift, 0, block}; }
    static Token listen(std::int64_t block = 0) { return {TokenKind::Listen, 0, block}; }
    static Token speak(std::int64_t block = 0) { return {TokenKind::Speak, 0, block}; }

    bool same_content(const Token& o) const {
        return kind == o.kind && (kind != TokenKind::Text || symbol == o.symbol);
    }
    bool operator==(const Token&) const = default;
};

enum class StatePhase { Listening, Speaking };

std::string to_string(StatePhase p);
StatePhase phase_from_string(const std::string& s);

// State changes only at block boundaries.
struct DialogueState {
    StatePhase phase = StatePhase::Listening;
    std::int64_t since_block = 0;  // first block spent in the current phase

    void toggle(std::int64_t next_block) {
        phase = (phase == StatePhase::Listening) ? StatePhase::Speaking : StatePhase::Listening;
        since_block = next_block;
    }
};

struct TimingConfig {
    int block_ms = 80;         // scheduling quantum
    int n_text = 4;            // text tokens per synthesis call
    int m_speech = 12;         // speech tokens per call
    int speech_token_ms = 40;  // 480 ms / 12 tokens

    int frames_per_block() const { return block_ms / kFrameMs; }
    bool operator==(const TimingConfig&) const = default;
};

// Throws std::invalid_argument on a config that violates its invariants.
void validate(const TimingConfig& cfg);

// Delay between the decision to speak and the first audible audio: n_text blocks.
std::int64_t onset_latency_ms(const TimingConfig& cfg);

// Duration of one synthesis call's output: m_speech tokens.
std::int64_t speech_chunk_duration_ms(const TimingConfig& cfg);

// 1000 / block_ms; rejects a zero block duration.
double blocks_per_second(const TimingConfig& cfg);

// 80 ms scheduling quantum: one block of each stream plus one emitted token.
struct TimeBlock {
    std::int64_t block_index = 0;
    std::vector<Frame> env_frames;   // exactly frames_per_block() entries
    std::vector<Frame> asst_frames;  // same wall-clock interval as env_frames
    std::optional<Token> emitted_token;
};

void validate(const TimeBlock& block, const TimingConfig& cfg);

// Error classes the CLI maps to distinct exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace duplex

#endif  // DUPLEX_TIMEBASE_HPP
