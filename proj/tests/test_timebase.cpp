#include <doctest.h>

#include "duplex/timebase.hpp"

using namespace duplex;

TEST_CASE("onset latency is n_text blocks") {
    TimingConfig cfg;
    CHECK(onset_latency_ms(cfg) == 320);  // 80 ms x 4

    cfg.n_text = 1;
    CHECK(onset_latency_ms(cfg) == 80);

    cfg = TimingConfig{};
    cfg.block_ms = 40;
    CHECK(onset_latency_ms(cfg) == 160);  // 40 x 4
}

TEST_CASE("speech chunk duration is m_speech tokens") {
    TimingConfig cfg;
    CHECK(speech_chunk_duration_ms(cfg) == 480);  // 12 x 40 ms

    cfg.m_speech = 0;
    CHECK(speech_chunk_duration_ms(cfg) == 0);

    cfg.m_speech = 6;
    CHECK(speech_chunk_duration_ms(cfg) == 240);
}

TEST_CASE("blocks per second") {
    TimingConfig cfg;
    CHECK(blocks_per_second(cfg) == doctest::Approx(12.5));
    cfg.block_ms = 100;
    CHECK(blocks_per_second(cfg) == doctest::Approx(10.0));
    cfg.block_ms = 40;
    CHECK(blocks_per_second(cfg) == doctest::Approx(25.0));

    cfg.block_ms = 0;
    CHECK_THROWS_AS(blocks_per_second(cfg), std::invalid_argument);
}

TEST_CASE("timing config validation") {
    TimingConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    CHECK(cfg.frames_per_block() == 8);

    cfg.block_ms = 75;  // not a 10 ms multiple
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = TimingConfig{};
    cfg.n_text = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("frame invariant: silence has no speaker") {
    Frame f;
    CHECK(frame_valid(f));
    f.speaker = Speaker::User;  // activity still 0
    CHECK_FALSE(frame_valid(f));
    f.activity = 0.5;
    CHECK(frame_valid(f));
    f.energy = -0.1;
    CHECK_FALSE(frame_valid(f));
}

TEST_CASE("time block carries one frame per 10 ms per stream") {
    TimingConfig cfg;
    TimeBlock b;
    b.env_frames.resize(8);
    b.asst_frames.resize(8);
    CHECK_NOTHROW(validate(b, cfg));
    b.env_frames.resize(7);
    CHECK_THROWS_AS(validate(b, cfg), std::invalid_argument);
}

TEST_CASE("dialogue state toggles at block boundaries") {
    DialogueState s;
    CHECK(s.phase == StatePhase::Listening);
    s.toggle(5);
    CHECK(s.phase == StatePhase::Speaking);
    CHECK(s.since_block == 5);
    s.toggle(9);
    CHECK(s.phase == StatePhase::Listening);
}
