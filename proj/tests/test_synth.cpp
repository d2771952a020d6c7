#include <doctest.h>

#include "duplex/synth.hpp"

using namespace duplex;

TEST_CASE("four text tokens emit one 12-token 480 ms chunk") {
    TimingConfig cfg;
    PlaybackState st;
    std::optional<SpeechChunk> chunk;
    for (int i = 0; i < 4; ++i) {
        auto res = feed_text_token(st, Token::text(i + 1, i), cfg);
        st = res.state;
        if (res.chunk) chunk = res.chunk;
        if (i < 3) {
            CHECK_FALSE(res.chunk.has_value());
            CHECK(st.pending_text == i + 1);
        }
    }
    REQUIRE(chunk.has_value());
    CHECK(chunk->tokens == 12);
    CHECK(chunk->duration_ms == 480);
    CHECK(chunk->first_text_block == 0);
    CHECK(chunk->last_text_block == 3);
    CHECK(st.buffered_ms == 480);
    CHECK(st.pending_text == 0);
}

TEST_CASE("three text tokens stay below the threshold") {
    TimingConfig cfg;
    PlaybackState st;
    for (int i = 0; i < 3; ++i) st = feed_text_token(st, Token::text(1, i), cfg).state;
    CHECK(st.pending_text == 3);
    CHECK(st.buffered_ms == 0);
}

TEST_CASE("nine text tokens emit exactly two chunks") {
    TimingConfig cfg;
    PlaybackState st;
    int chunks = 0;
    for (int i = 0; i < 9; ++i) {
        auto res = feed_text_token(st, Token::text(1, i), cfg);
        st = res.state;
        if (res.chunk) ++chunks;
    }
    CHECK(chunks == 9 / cfg.n_text);  // floor(9/4)
    CHECK(chunks == 2);
    CHECK(st.pending_text == 1);
    CHECK(st.buffered_ms == 960);
}

TEST_CASE("control tokens are rejected by the synthesizer") {
    TimingConfig cfg;
    PlaybackState st;
    CHECK_THROWS_AS(feed_text_token(st, Token::shift(0), cfg), std::invalid_argument);
    CHECK_THROWS_AS(feed_text_token(st, Token::think(0), cfg), std::invalid_argument);
}

TEST_CASE("advance_block drains one block of audio") {
    TimingConfig cfg;
    PlaybackState st;
    st.buffered_ms = 480;
    st.playing = true;
    st = advance_block(st, cfg);
    CHECK(st.buffered_ms == 400);
    CHECK(st.playing);

    PlaybackState empty;
    empty = advance_block(empty, cfg);
    CHECK(empty.buffered_ms == 0);
    CHECK_FALSE(empty.playing);
}

TEST_CASE("steady speaking grows the buffer by 160 ms per four blocks") {
    TimingConfig cfg;
    PlaybackState st;
    std::vector<std::int64_t> after_each_cycle;
    for (int block = 1; block <= 12; ++block) {
        auto res = feed_text_token(st, Token::text(1, block), cfg);
        st = advance_block(res.state, cfg, res.chunk.has_value());
        if (block % 4 == 0) after_each_cycle.push_back(st.buffered_ms);
    }
    // hand-simulated: 480 in per cycle, 320 played once audio exists
    CHECK(after_each_cycle == std::vector<std::int64_t>{400, 560, 720});
    CHECK(st.playing);
}

TEST_CASE("buffered audio never goes negative") {
    TimingConfig cfg;
    PlaybackState st;
    st.buffered_ms = 40;
    st = advance_block(st, cfg);
    CHECK(st.buffered_ms == 0);
    st = advance_block(st, cfg);
    CHECK(st.buffered_ms == 0);
}

TEST_CASE("flush_on_interrupt clears the buffer and is idempotent") {
    PlaybackState st;
    st.buffered_ms = 400;
    st.pending_text = 2;
    st.playing = true;
    st = flush_on_interrupt(st);
    CHECK(st == PlaybackState{0, false, 0});
    CHECK(flush_on_interrupt(st) == st);
}

TEST_CASE("total speech from pure feeding is floor(T/N) chunks") {
    TimingConfig cfg;
    for (int total : {1, 4, 7, 12, 23}) {
        PlaybackState st;
        std::int64_t speech_ms = 0;
        for (int i = 0; i < total; ++i) {
            auto res = feed_text_token(st, Token::text(1, i), cfg);
            st = res.state;
            if (res.chunk) speech_ms += res.chunk->duration_ms;
        }
        CHECK(speech_ms == (total / cfg.n_text) * 480);
    }
}

TEST_CASE("end-of-response tail flush preserves the 1:3 token ratio") {
    TimingConfig cfg;
    PlaybackState st;
    for (int i = 0; i < 6; ++i) st = feed_text_token(st, Token::text(1, i), cfg).state;
    CHECK(st.pending_text == 2);
    auto res = flush_pending(st, cfg);
    REQUIRE(res.chunk.has_value());
    CHECK(res.chunk->tokens == 6);  // 2 text tokens x 3
    CHECK(res.chunk->duration_ms == 240);
    CHECK(res.state.pending_text == 0);
    CHECK(res.state.buffered_ms == 480 + 240);

    // nothing pending: no chunk
    auto noop = flush_pending(res.state, cfg);
    CHECK_FALSE(noop.chunk.has_value());
    CHECK(noop.state == res.state);
}
