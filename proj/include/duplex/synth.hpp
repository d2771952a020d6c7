#ifndef DUPLEX_SYNTH_HPP
#define DUPLEX_SYNTH_HPP

#include <optional>

#include "duplex/timebase.hpp"

namespace duplex {

// One fixed-length synthesizer call: m_speech tokens per n_text text tokens.
struct SpeechChunk {
    int tokens = 0;
    std::int64_t duration_ms = 0;
    std::int64_t ready_ms = 0;             // block boundary the chunk became available
    std::int64_t first_text_block = -1;    // source text token range
    std::int64_t last_text_block = -1;

    bool operator==(const SpeechChunk&) const = default;
};

struct PlaybackState {
    std::int64_t buffered_ms = 0;  // never negative
    bool playing = false;
    int pending_text = 0;          // in [0, n_text)

    bool operator==(const PlaybackState&) const = default;
};

struct FeedResult {
    PlaybackState state;
    std::optional<SpeechChunk> chunk;
};

// Accumulates one text token; every n_text tokens a full chunk is emitted and
// buffered. Control tokens are rejected.
FeedResult feed_text_token(PlaybackState state, const Token& tok, const TimingConfig& cfg);

// Consumes one block of playback. playing stays true if audio remains or a
// chunk was emitted during this block.
PlaybackState advance_block(PlaybackState state, const TimingConfig& cfg,
                            bool chunk_emitted_this_block = false);

// Barge-in: drop buffered audio and pending text. Idempotent.
PlaybackState flush_on_interrupt(PlaybackState state);

// End of response: residual pending text (< n_text tokens) becomes one short
// chunk, preserving the m_speech:n_text token ratio.
FeedResult flush_pending(PlaybackState state, const TimingConfig& cfg);

}  // namespace duplex

#endif  // DUPLEX_SYNTH_HPP
