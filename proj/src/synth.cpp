#include "duplex/synth.hpp"

#include <algorithm>

namespace duplex {

FeedResult feed_text_token(PlaybackState state, const Token& tok, const TimingConfig& cfg) {
    if (tok.kind != TokenKind::Text)
        throw std::invalid_argument("synthesizer accepts text tokens only, got '" +
                                    to_string(tok.kind) + "'");
    FeedResult res;
    state.pending_text += 1;
    if (state.pending_text >= cfg.n_text) {
        SpeechChunk chunk;
        chunk.tokens = cfg.m_speech;
        chunk.duration_ms = speech_chunk_duration_ms(cfg);
        chunk.last_text_block = tok.block_index;
        chunk.first_text_block = tok.block_index - (cfg.n_text - 1);
        chunk.ready_ms = (tok.block_index + 1) * cfg.block_ms;
        state.buffered_ms += chunk.duration_ms;
        state.pending_text = 0;
        state.playing = true;
        res.chunk = chunk;
    }
    res.state = state;
    return res;
}

PlaybackState advance_block(PlaybackState state, const TimingConfig& cfg,
                            bool chunk_emitted_this_block) {
    state.buffered_ms -= std::min<std::int64_t>(state.buffered_ms, cfg.block_ms);
    state.playing = state.buffered_ms > 0 || chunk_emitted_this_block;
    return state;
}

PlaybackState flush_on_interrupt(PlaybackState state) {
    state.buffered_ms = 0;
    state.pending_text = 0;
    state.playing = false;
    return state;
}

FeedResult flush_pending(PlaybackState state, const TimingConfig& cfg) {
    FeedResult res;
    if (state.pending_text > 0) {
        SpeechChunk chunk;
        chunk.tokens = state.pending_text * cfg.m_speech / cfg.n_text;
        chunk.duration_ms = static_cast<std::int64_t>(chunk.tokens) * cfg.speech_token_ms;
        state.buffered_ms += chunk.duration_ms;
        state.pending_text = 0;
        if (chunk.duration_ms > 0) state.playing = true;
        res.chunk = chunk;
    }
    res.state = state;
    return res;
}

}  // namespace duplex
