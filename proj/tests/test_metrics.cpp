#include <doctest.h>

#include <random>

#include "duplex/config.hpp"
#include "duplex/metrics.hpp"

using namespace duplex;

namespace {

std::vector<InterruptJudgment> judgments_from_counts(std::int64_t tp, std::int64_t fp,
                                                     std::int64_t fn, std::int64_t tn) {
    std::vector<InterruptJudgment> js;
    for (std::int64_t i = 0; i < tp; ++i) js.push_back({"tp", ProbeSetting::Independent, true, true, 1});
    for (std::int64_t i = 0; i < fp; ++i) js.push_back({"fp", ProbeSetting::Independent, false, true, 1});
    for (std::int64_t i = 0; i < fn; ++i) js.push_back({"fn", ProbeSetting::Independent, true, false, {}});
    for (std::int64_t i = 0; i < tn; ++i) js.push_back({"tn", ProbeSetting::Independent, false, false, {}});
    return js;
}

Transcript transcript_with_onset(std::int64_t onset_ms) {
    Transcript t;
    t.scenario_id = "crafted";
    BlockRecord r;
    r.block = onset_ms / 80;
    r.state = StatePhase::Speaking;
    r.token = Token::text(1, r.block);
    r.events.push_back({"speech_start", onset_ms, 0, 0, 0});
    t.records.push_back(r);
    return t;
}

Scenario scenario_with_turn_end(std::int64_t end_ms) {
    Scenario sc;
    sc.id = "crafted";
    ScenarioEvent ev;
    ev.kind = EventKind::UserUtterance;
    ev.start_ms = 0;
    ev.duration_ms = end_ms;
    ev.label = EventLabel::TurnEnd;
    ev.activity.assign(static_cast<std::size_t>(end_ms / 80), 1.0);
    sc.events.push_back(ev);
    return sc;
}

}  // namespace

TEST_CASE("prf reproduces the reference arithmetic: P 0.68, R 0.93 -> F1 0.79") {
    // counts chosen so the ratios are exact: tp=1581, fp=744, fn=119
    const auto prf = prf_from_counts(1581, 744, 119);
    CHECK(prf.precision == doctest::Approx(0.68).epsilon(1e-12));
    CHECK(prf.recall == doctest::Approx(0.93).epsilon(1e-12));
    CHECK(std::abs(prf.f1 - 0.79) <= 0.005);
    CHECK(prf.f1 == doctest::Approx(2 * 0.68 * 0.93 / (0.68 + 0.93)));

    const auto via_judgments = interruption_prf(judgments_from_counts(1581, 744, 119, 0));
    CHECK(via_judgments.f1 == doctest::Approx(prf.f1));
}

TEST_CASE("perfect judgments give precision, recall and f1 of one") {
    const auto prf = interruption_prf(judgments_from_counts(10, 0, 0, 10));
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 1.0);
    CHECK(prf.f1 == 1.0);
}

TEST_CASE("equal precision and recall give the same f1") {
    const auto prf = prf_from_counts(1, 1, 1);
    CHECK(prf.precision == 0.5);
    CHECK(prf.recall == 0.5);
    CHECK(prf.f1 == doctest::Approx(0.5));
}

TEST_CASE("undefined denominators are explicit errors") {
    CHECK_THROWS_WITH_AS(prf_from_counts(0, 0, 5), doctest::Contains("no predicted positives"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(prf_from_counts(0, 5, 0), doctest::Contains("no positive examples"),
                         std::invalid_argument);
}

TEST_CASE("flipping every decision swaps the confusion quadrants") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<InterruptJudgment> js;
        for (int i = 0; i < 50; ++i)
            js.push_back({"x", ProbeSetting::Independent, coin(rng) == 1, coin(rng) == 1, {}});

        // brute-force confusion oracle
        ConfusionCounts expect;
        for (const auto& j : js) {
            if (j.positive && j.stopped) expect.tp++;
            if (!j.positive && j.stopped) expect.fp++;
            if (j.positive && !j.stopped) expect.fn++;
            if (!j.positive && !j.stopped) expect.tn++;
        }
        auto got = count_judgments(js);
        CHECK(got.tp == expect.tp);
        CHECK(got.fp == expect.fp);
        CHECK(got.fn == expect.fn);
        CHECK(got.tn == expect.tn);

        for (auto& j : js) j.stopped = !j.stopped;
        const auto flipped = count_judgments(js);
        CHECK(flipped.tp == expect.fn);
        CHECK(flipped.fn == expect.tp);
        CHECK(flipped.fp == expect.tn);
        CHECK(flipped.tn == expect.fp);
    }
}

TEST_CASE("overall f1 is the arithmetic mean") {
    CHECK(overall_f1(0.79, 0.93) == doctest::Approx(0.86));
    CHECK(std::abs(overall_f1(0.88, 0.93) - 0.90) <= 0.005 + 1e-12);
    CHECK(overall_f1(0.4, 0.4) == doctest::Approx(0.4));
    CHECK_THROWS_AS(overall_f1(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(overall_f1(0.5, 1.2), std::invalid_argument);
}

TEST_CASE("turn-taking judgment window boundaries") {
    const auto sc = scenario_with_turn_end(1600);

    SUBCASE("onset exactly at end + late_tol succeeds (closed upper bound)") {
        const auto j = judge_turn_taking(sc, transcript_with_onset(1600 + 1000), 240, 1000);
        CHECK(j.success);
        CHECK(*j.latency_ms == 1000);
    }
    SUBCASE("onset just past the bound fails") {
        const auto j = judge_turn_taking(sc, transcript_with_onset(1600 + 1080), 240, 1000);
        CHECK_FALSE(j.success);
    }
    SUBCASE("early anticipation within tolerance succeeds") {
        const auto j = judge_turn_taking(sc, transcript_with_onset(1600 - 160), 240, 1000);
        CHECK(j.success);
        CHECK(*j.latency_ms == -160);
    }
    SUBCASE("speaking too early fails") {
        const auto j = judge_turn_taking(sc, transcript_with_onset(1600 - 240), 240, 1000);
        CHECK_FALSE(j.success);
    }
    SUBCASE("never speaking fails") {
        Transcript silent;
        silent.scenario_id = "crafted";
        const auto j = judge_turn_taking(sc, silent, 240, 1000);
        CHECK_FALSE(j.success);
        CHECK_FALSE(j.speak_onset_ms.has_value());
    }
}

TEST_CASE("turn-taking judgment requires exactly one turn end") {
    Scenario none;
    none.id = "none";
    CHECK_THROWS_AS(judge_turn_taking(none, Transcript{}, 240, 1000), std::invalid_argument);

    auto two = scenario_with_turn_end(800);
    two.events.push_back(two.events[0]);
    CHECK_THROWS_AS(judge_turn_taking(two, Transcript{}, 240, 1000), std::invalid_argument);
}

TEST_CASE("turn-taking success is monotone in the late tolerance") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> jitter(-6, 30);
    const auto sc = scenario_with_turn_end(1600);
    std::vector<std::int64_t> onsets;
    for (int i = 0; i < 40; ++i) onsets.push_back(1600 + jitter(rng) * 80);

    double prev = -1.0;
    for (std::int64_t late : {80, 400, 800, 1600, 2400}) {
        std::vector<TurnTakingJudgment> js;
        for (auto onset : onsets)
            js.push_back(judge_turn_taking(sc, transcript_with_onset(onset), 240, late));
        const double rate = turn_taking_success(js);
        CHECK(rate >= prev);
        prev = rate;
    }
}

TEST_CASE("latency summaries use the lower median") {
    const auto s = summarize_latencies({480, 320});
    CHECK(s.count == 2);
    CHECK(s.mean == doctest::Approx(400.0));
    CHECK(s.p50 == 320);
    CHECK(s.p95 == 480);

    const auto empty = summarize_latencies({});
    CHECK(empty.count == 0);
}

TEST_CASE("latency report excludes failures and reports counts") {
    std::vector<TurnTakingJudgment> turns;
    TurnTakingJudgment ok;
    ok.success = true;
    ok.latency_ms = 320;
    TurnTakingJudgment fail;
    turns.push_back(ok);
    turns.push_back(fail);

    std::vector<InterruptJudgment> ints;
    ints.push_back({"a", ProbeSetting::Independent, true, true, 4});
    ints.push_back({"b", ProbeSetting::Independent, true, false, {}});
    ints.push_back({"c", ProbeSetting::Independent, false, false, {}});

    const auto r = latency_report(turns, ints);
    CHECK(r.turn_taking.count == 1);
    CHECK(r.turn_taking.mean == doctest::Approx(320));
    CHECK(r.excluded_turn_taking == 1);
    CHECK(r.interrupt_blocks.count == 1);
    CHECK(r.interrupt_blocks.p50 == 4);
    CHECK(r.excluded_interrupt == 2);
}

TEST_CASE("interrupt judgments read the probe and the realized transitions") {
    // crafted transcript: speaking from block 10, stop shift at block 33
    Transcript t;
    t.scenario_id = "scripted-barge";
    for (std::int64_t b = 0; b < 40; ++b) {
        BlockRecord r;
        r.block = b;
        r.state = b >= 10 && b <= 33 ? StatePhase::Speaking : StatePhase::Listening;
        r.token = b == 33 ? Token::shift(b) : (b == 9 ? Token::shift(b) : Token::think(b));
        if (b == 9) r.state = StatePhase::Listening;
        t.records.push_back(r);
    }

    Scenario sc;
    sc.id = "scripted-barge";
    ScenarioEvent probe;
    probe.kind = EventKind::UserUtterance;
    probe.start_ms = 30 * 80;
    probe.duration_ms = 8 * 80;
    probe.label = EventLabel::TrueBargeIn;
    sc.events.push_back(probe);
    sc.probe_event = 0;
    sc.probe_setting = ProbeSetting::Independent;

    auto j = judge_interrupt(sc, t, 480);
    REQUIRE(j.has_value());
    CHECK(j->positive);
    CHECK(j->stopped);
    CHECK(*j->decision_latency_blocks == 4);

    // a stop outside the window does not count
    auto late = judge_interrupt(sc, t, 240);
    REQUIRE(late.has_value());
    CHECK_FALSE(late->stopped);

    Scenario no_probe;
    no_probe.id = "scripted-barge";
    CHECK_FALSE(judge_interrupt(no_probe, t, 480).has_value());
}

TEST_CASE("evaluate_suite aggregates oracle runs to perfect scores") {
    const auto suite = generate_suite(SuiteKind::BargeInDependent, 24, 5);
    SimParams params;
    params.config_hash = "cafef00d";
    std::vector<Transcript> transcripts;
    for (const auto& sc : suite) {
        OraclePolicy oracle(sc, StrategyKind::Explicit);
        transcripts.push_back(run_conversation(sc, oracle, params));
    }
    const auto report = evaluate_suite(suite, transcripts, EvalTolerances{});
    CHECK(report.conversations == 24);
    CHECK(report.protocol_violations == 0);
    CHECK(report.turn_taking_rate == 1.0);
    CHECK(report.turn_taking_judged == 24);
    REQUIRE(report.dependent.prf.has_value());
    CHECK(report.dependent.prf->f1 == 1.0);
    CHECK(report.independent.judged == 0);
    CHECK_FALSE(report.overall.has_value());
    CHECK(report.latency.turn_taking.p50 == 320);

    const auto j = report_to_json(report);
    CHECK(j.at("turn_taking").at("success_rate") == 1.0);
    CHECK(j.at("config_hash") == "cafef00d");
    const auto text = report_to_text(report);
    CHECK(text.find("turn-taking") != std::string::npos);
}

TEST_CASE("engine config round-trips, hashes stably, and rejects unknown keys") {
    EngineConfig cfg;
    const auto j = engine_config_to_json(cfg);
    const auto back = engine_config_from_json(j);
    CHECK(engine_config_to_json(back).dump() == j.dump());
    CHECK(config_hash(cfg) == config_hash(back));

    auto bad = j;
    bad["surprise"] = 1;
    CHECK_THROWS_AS(engine_config_from_json(bad), ConfigError);

    auto bad_nested = j;
    bad_nested["timing"]["block_mss"] = 80;
    CHECK_THROWS_AS(engine_config_from_json(bad_nested), ConfigError);

    auto bad_value = j;
    bad_value["timing"]["block_ms"] = 75;
    CHECK_THROWS_AS(engine_config_from_json(bad_value), ConfigError);
}
