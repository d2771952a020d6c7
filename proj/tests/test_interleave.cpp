#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "duplex/interleave.hpp"
#include "golden_fixture.hpp"

using namespace duplex;
using duplex::testing::all_strategies;
using duplex::testing::golden_blocks;
using duplex::testing::golden_truth;

namespace {

std::vector<BlockEmbeddings> random_embeddings(std::mt19937_64& rng, std::size_t blocks) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<BlockEmbeddings> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        out[b].block_index = static_cast<std::int64_t>(b);
        for (auto* stream : {&out[b].env, &out[b].asst}) {
            stream->resize(2, FeatureVector(16));
            for (auto& v : *stream)
                for (auto& x : v) x = u(rng);
        }
    }
    return out;
}

// Random but phase-consistent dialogue: listening runs, transitions, text
// runs, drain waits.
std::vector<BlockTruthRecord> random_truth(std::mt19937_64& rng, std::size_t blocks) {
    std::vector<BlockTruthRecord> truth;
    std::uniform_int_distribution<int> run(1, 6);
    std::uniform_int_distribution<int> sym(1, 99);
    bool speaking = false;
    while (truth.size() < blocks) {
        if (!speaking) {
            for (int i = run(rng); i > 0 && truth.size() < blocks; --i)
                truth.push_back({BlockPhase::Listen, 0, sym(rng)});
            if (truth.size() < blocks) {
                truth.push_back({BlockPhase::ShiftToSpeak, 0, 0});
                speaking = true;
            }
        } else {
            for (int i = run(rng); i > 0 && truth.size() < blocks; --i)
                truth.push_back({BlockPhase::SpeakText, sym(rng), 0});
            for (int i = run(rng) / 2; i > 0 && truth.size() < blocks; --i)
                truth.push_back({BlockPhase::SpeakWait, 0, 0});
            if (truth.size() < blocks) {
                truth.push_back({BlockPhase::ShiftToListen, 0, 0});
                speaking = false;
            }
        }
    }
    truth.resize(blocks);
    return truth;
}

}  // namespace

TEST_CASE("label schemes over the fixture dialogue follow each strategy's rules") {
    const auto truth = golden_truth();

    SUBCASE("explicit") {
        const auto labels = label_scheme(truth, StrategyKind::Explicit);
        REQUIRE(labels.size() == 6);
        CHECK(labels[0].token.kind == TokenKind::Think);
        CHECK(labels[2].token.kind == TokenKind::Shift);
        CHECK(labels[3].token == Token::text(1, 3));
        CHECK(labels[5].token.kind == TokenKind::Shift);
        for (const auto& l : labels) CHECK(l.loss_weight == 1.0);
    }
    SUBCASE("implicit uses listen/speak state tokens") {
        const auto labels = label_scheme(truth, StrategyKind::Implicit);
        CHECK(labels[0].token.kind == TokenKind::Listen);
        CHECK(labels[2].token.kind == TokenKind::Speak);
        CHECK(labels[3].token.kind == TokenKind::Text);
        CHECK(labels[5].token.kind == TokenKind::Listen);
    }
    SUBCASE("asr variants echo the environment transcript while listening") {
        for (auto s : {StrategyKind::ImplicitASR, StrategyKind::ExplicitASR}) {
            const auto labels = label_scheme(truth, s);
            CHECK(labels[0].token == Token::text(11, 0));
            CHECK(labels[1].token == Token::text(12, 1));
            CHECK(labels[2].token.kind == TokenKind::Shift);
            CHECK(labels[3].token == Token::text(1, 3));
        }
    }
    SUBCASE("explicit-ns labels shift everywhere with negative weights off transitions") {
        const auto labels = label_scheme(truth, StrategyKind::ExplicitNS, 0.1);
        CHECK(labels[0].token.kind == TokenKind::Shift);
        CHECK(labels[0].loss_weight == doctest::Approx(-0.1));
        CHECK(labels[1].loss_weight == doctest::Approx(-0.1));
        CHECK(labels[2].loss_weight == 1.0);  // true transition
        CHECK(labels[3].token.kind == TokenKind::Text);
        CHECK(labels[3].loss_weight == 1.0);
        CHECK(labels[5].loss_weight == 1.0);
        for (const auto& l : labels) CHECK(l.loss_weight != 0.0);
    }
}

TEST_CASE("explicit-ns labels a wait block with a negative shift") {
    std::vector<BlockTruthRecord> truth{{BlockPhase::SpeakWait, 0, 0}};
    const auto labels = label_scheme(truth, StrategyKind::ExplicitNS, 0.25);
    CHECK(labels[0].token.kind == TokenKind::Shift);
    CHECK(labels[0].loss_weight == doctest::Approx(-0.25));
}

TEST_CASE("three listening blocks under explicit feed think back each block") {
    std::vector<BlockTruthRecord> truth(3, {BlockPhase::Listen, 0, 0});
    const auto labels = label_scheme(truth, StrategyKind::Explicit);
    std::mt19937_64 rng(1);
    const auto blocks = random_embeddings(rng, 3);
    const auto seq = build_sequence(blocks, labels, StrategyKind::Explicit);

    // block 0: [env, env, asst, asst, label]; blocks 1..2 open with the
    // previous think as input
    REQUIRE(seq.items.size() == 5 + 6 + 6);
    CHECK(seq.items[0].kind == SlotKind::EnvEmbedding);
    CHECK(seq.items[5].kind == SlotKind::TokenInput);
    CHECK(seq.items[5].token.kind == TokenKind::Think);
    CHECK(seq.items[11].kind == SlotKind::TokenInput);
}

TEST_CASE("empty dialogue builds an empty sequence") {
    const auto seq = build_sequence(std::span<const BlockEmbeddings>{},
                                    std::span<const LabeledToken>{}, StrategyKind::Explicit);
    CHECK(seq.items.empty());
    const auto back = deinterleave(seq);
    CHECK(back.blocks.empty());
    CHECK(back.labels.empty());
}

TEST_CASE("token input placement per strategy on the fixture dialogue") {
    const auto truth = golden_truth();
    std::mt19937_64 rng(2);
    const auto blocks = random_embeddings(rng, truth.size());

    auto inputs_of = [&](StrategyKind s) {
        const auto seq = build_sequence(blocks, label_scheme(truth, s), s);
        std::vector<std::pair<std::int64_t, Token>> inputs;
        for (const auto& item : seq.items)
            if (item.kind == SlotKind::TokenInput) inputs.emplace_back(item.block_index, item.token);
        return inputs;
    };

    SUBCASE("explicit feeds every token back") {
        const auto in = inputs_of(StrategyKind::Explicit);
        REQUIRE(in.size() == 5);
        CHECK(in[0].second.kind == TokenKind::Think);
        CHECK(in[2].second.kind == TokenKind::Shift);
        CHECK(in[3].second.same_content(Token::text(1)));
        CHECK(in[3].first == 4);  // the feedback copy lives in the block it opens
    }
    SUBCASE("implicit feeds only speaking-state text back") {
        const auto in = inputs_of(StrategyKind::Implicit);
        REQUIRE(in.size() == 2);
        CHECK(in[0].first == 4);
        CHECK(in[0].second.same_content(Token::text(1)));
        CHECK(in[1].first == 5);
        CHECK(in[1].second.same_content(Token::text(2)));
    }
    SUBCASE("implicit-asr does not feed listening-state text back") {
        const auto in = inputs_of(StrategyKind::ImplicitASR);
        REQUIRE(in.size() == 2);
        CHECK(in[0].first == 4);
    }
    SUBCASE("explicit-asr feeds asr thinking back") {
        const auto in = inputs_of(StrategyKind::ExplicitASR);
        REQUIRE(in.size() == 5);
        CHECK(in[0].second.same_content(Token::text(11)));
    }
    SUBCASE("explicit-ns feeds the realized stream, not the counterfactual labels") {
        const auto in = inputs_of(StrategyKind::ExplicitNS);
        REQUIRE(in.size() == 5);
        CHECK(in[0].second.kind == TokenKind::Think);  // realized hold, not the Shift label
        CHECK(in[1].second.kind == TokenKind::Think);
        CHECK(in[2].second.kind == TokenKind::Shift);  // true transition
        CHECK(in[3].second.same_content(Token::text(1)));
    }
}

TEST_CASE("layout scan: four embeddings and at most one input between labels") {
    std::mt19937_64 rng(77);
    for (auto strategy : all_strategies()) {
        const auto truth = random_truth(rng, 40);
        const auto blocks = random_embeddings(rng, 40);
        const auto seq = build_sequence(blocks, label_scheme(truth, strategy), strategy);
        int embeddings = 0, inputs = 0;
        for (const auto& item : seq.items) {
            switch (item.kind) {
                case SlotKind::EnvEmbedding:
                case SlotKind::AsstEmbedding: ++embeddings; break;
                case SlotKind::TokenInput: ++inputs; break;
                case SlotKind::TokenLabel:
                    CHECK(embeddings == 4);
                    CHECK(inputs <= 1);
                    embeddings = 0;
                    inputs = 0;
                    break;
            }
        }
    }
}

TEST_CASE("explicit token input equals the previous label") {
    std::mt19937_64 rng(78);
    const auto truth = random_truth(rng, 30);
    for (auto strategy : {StrategyKind::Explicit, StrategyKind::ExplicitASR}) {
        const auto labels = label_scheme(truth, strategy);
        const auto blocks = random_embeddings(rng, 30);
        const auto seq = build_sequence(blocks, labels, strategy);
        for (const auto& item : seq.items) {
            if (item.kind != SlotKind::TokenInput) continue;
            const auto k = static_cast<std::size_t>(item.block_index);
            CHECK(item.token.same_content(labels[k - 1].token));
        }
    }
}

TEST_CASE("deinterleave round-trips seeded random dialogues under all strategies") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        for (auto strategy : all_strategies()) {
            const auto truth = random_truth(rng, 50);
            const auto labels = label_scheme(truth, strategy);
            const auto blocks = random_embeddings(rng, 50);
            const auto seq = build_sequence(blocks, labels, strategy);
            const auto back = deinterleave(seq);
            CHECK(back.blocks == blocks);
            CHECK(back.labels == labels);
        }
    }
}

TEST_CASE("build_sequence rejects malformed input") {
    std::mt19937_64 rng(5);
    const auto blocks = random_embeddings(rng, 3);
    std::vector<BlockTruthRecord> truth(3, {BlockPhase::Listen, 0, 0});

    SUBCASE("misaligned lengths") {
        const auto labels = label_scheme(std::span<const BlockTruthRecord>(truth.data(), 2),
                                         StrategyKind::Explicit);
        CHECK_THROWS_AS(build_sequence(blocks, labels, StrategyKind::Explicit),
                        std::invalid_argument);
    }
    SUBCASE("listen/speak tokens are rejected under explicit strategies") {
        std::vector<LabeledToken> labels{{Token::listen(0), 1.0},
                                         {Token::listen(1), 1.0},
                                         {Token::listen(2), 1.0}};
        CHECK_THROWS_AS(build_sequence(blocks, labels, StrategyKind::Explicit),
                        std::invalid_argument);
    }
    SUBCASE("think/shift tokens are rejected under implicit") {
        std::vector<LabeledToken> labels{{Token::think(0), 1.0},
                                         {Token::think(1), 1.0},
                                         {Token::think(2), 1.0}};
        CHECK_THROWS_AS(build_sequence(blocks, labels, StrategyKind::Implicit),
                        std::invalid_argument);
    }
    SUBCASE("explicit-ns rejects zero weights") {
        std::vector<LabeledToken> labels{{Token::shift(0), 0.0},
                                         {Token::shift(1), -0.1},
                                         {Token::shift(2), -0.1}};
        CHECK_THROWS_AS(build_sequence(blocks, labels, StrategyKind::ExplicitNS),
                        std::invalid_argument);
    }
}

TEST_CASE("deinterleave reports the first offending item") {
    std::mt19937_64 rng(6);
    const auto truth = random_truth(rng, 8);
    const auto labels = label_scheme(truth, StrategyKind::Explicit);
    const auto blocks = random_embeddings(rng, 8);
    auto seq = build_sequence(blocks, labels, StrategyKind::Explicit);

    SUBCASE("dropped embedding") {
        seq.items.erase(seq.items.begin() + 1);
        CHECK_THROWS_WITH_AS(deinterleave(seq),
                             doctest::Contains("malformed interleaved layout at item"),
                             std::invalid_argument);
    }
    SUBCASE("corrupted token input") {
        for (auto& item : seq.items) {
            if (item.kind == SlotKind::TokenInput && item.token.kind == TokenKind::Think) {
                item.token = Token::shift(item.block_index);
                break;
            }
        }
        CHECK_THROWS_AS(deinterleave(seq), std::invalid_argument);
    }
}

TEST_CASE("sequences serialize to jsonl and back") {
    std::mt19937_64 rng(9);
    const auto truth = random_truth(rng, 12);
    for (auto strategy : all_strategies()) {
        const auto seq =
            build_sequence(random_embeddings(rng, 12), label_scheme(truth, strategy), strategy);
        std::stringstream buf;
        write_sequence_jsonl(buf, seq);
        const auto loaded = read_sequence_jsonl(buf);
        CHECK(loaded.strategy == seq.strategy);
        REQUIRE(loaded.items.size() == seq.items.size());
        for (std::size_t i = 0; i < seq.items.size(); ++i) {
            CHECK(loaded.items[i].kind == seq.items[i].kind);
            CHECK(loaded.items[i].block_index == seq.items[i].block_index);
            CHECK(loaded.items[i].embedding == seq.items[i].embedding);
            CHECK(loaded.items[i].token.same_content(seq.items[i].token));
            CHECK(loaded.items[i].loss_weight == seq.items[i].loss_weight);
        }
    }
}

TEST_CASE("fixture dialogue matches the frozen goldens for all strategies") {
    const auto blocks = golden_blocks();
    const auto truth = golden_truth();
    for (auto strategy : all_strategies()) {
        const auto seq =
            build_sequence(blocks, label_scheme(truth, strategy), strategy, {}, {});
        const std::string path =
            std::string(DUPLEX_TEST_DATA_DIR) + "/golden_" + to_string(strategy) + ".jsonl";
        std::ifstream in(path);
        REQUIRE_MESSAGE(in.good(), "missing golden file ", path);
        const auto golden = read_sequence_jsonl(in);
        REQUIRE(golden.items.size() == seq.items.size());
        for (std::size_t i = 0; i < seq.items.size(); ++i) {
            CAPTURE(i);
            CHECK(golden.items[i].kind == seq.items[i].kind);
            CHECK(golden.items[i].block_index == seq.items[i].block_index);
            CHECK(golden.items[i].embedding == seq.items[i].embedding);
            CHECK(golden.items[i].token.same_content(seq.items[i].token));
            CHECK(golden.items[i].loss_weight == seq.items[i].loss_weight);
        }

        const auto back = deinterleave(seq);
        CHECK(back.labels == label_scheme(truth, strategy));
        CHECK(back.blocks == embed_blocks(blocks, {}, {}));
    }
}
