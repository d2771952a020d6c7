#include <doctest.h>

#include <cmath>
#include <random>

#include "duplex/frontend.hpp"

using namespace duplex;

namespace {

std::vector<Frame> random_frames(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Frame> frames(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& f = frames[i];
        f.t_index = static_cast<std::int64_t>(i);
        f.activity = u(rng);
        f.speaker = f.activity > 0 ? (u(rng) < 0.5 ? Speaker::User : Speaker::ThirdParty)
                                   : Speaker::None;
        f.relevance = u(rng);
        f.energy = f.activity;
    }
    return frames;
}

// independent elementwise oracle for the L1 loss
double l1_oracle(const std::vector<FeatureVector>& a, const std::vector<FeatureVector>& b) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            sum += std::abs(a[i][j] - b[i][j]);
            ++count;
        }
    return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("rate contract: 100 Hz -> 50 Hz -> 25 Hz") {
    std::mt19937_64 rng(7);
    const auto frames = random_frames(rng, 100);  // 1 second
    const auto at50 = downsample_100_to_50(frames);
    CHECK(at50.vectors.size() == 50);
    CHECK_FALSE(at50.padded);
    const auto at25 = concat_pairs_50_to_25(at50.vectors);
    CHECK(at25.size() == 25);
    CHECK(at25.front().size() == 16);
}

TEST_CASE("one 80 ms block yields 4 then 2 vectors") {
    std::mt19937_64 rng(11);
    const auto frames = random_frames(rng, 8);
    const auto at50 = downsample_100_to_50(frames);
    CHECK(at50.vectors.size() == 4);
    CHECK(concat_pairs_50_to_25(at50.vectors).size() == 2);
}

TEST_CASE("constant input projects to itself") {
    Frame f;
    f.activity = 0.6;
    f.speaker = Speaker::User;
    f.relevance = 0.9;
    f.energy = 0.6;
    const std::vector<Frame> frames{f, f};
    const auto out = downsample_100_to_50(frames);
    REQUIRE(out.vectors.size() == 1);
    const FeatureVector expected{0.6, 0.6, 1.0, 0.0, 0.0, 0.9, 0.6, 0.6};
    CHECK(out.vectors[0] == expected);
}

TEST_CASE("odd input is padded by repeating the trailing frame") {
    std::mt19937_64 rng(3);
    const auto frames = random_frames(rng, 3);
    const auto out = downsample_100_to_50(frames);
    CHECK(out.vectors.size() == 2);
    CHECK(out.padded);

    CHECK(downsample_100_to_50({}).vectors.empty());
    CHECK_THROWS_AS(concat_pairs_50_to_25({FeatureVector{1.0}}), std::invalid_argument);
}

TEST_CASE("causality: prefixes of the input yield prefixes of the output") {
    std::mt19937_64 rng(23);
    const auto frames = random_frames(rng, 64);
    const auto full = downsample_100_to_50(frames);
    for (std::size_t k = 2; k <= frames.size(); k += 2) {
        const auto part =
            downsample_100_to_50(std::span<const Frame>(frames.data(), k));
        for (std::size_t i = 0; i < part.vectors.size(); ++i)
            CHECK(part.vectors[i] == full.vectors[i]);
    }
}

TEST_CASE("streaming accumulator matches the whole-sequence pipeline") {
    std::mt19937_64 rng(41);
    const auto frames = random_frames(rng, 8 * 12);
    const auto whole = concat_pairs_50_to_25(downsample_100_to_50(frames).vectors);

    FrontendStream stream({}, {});
    std::vector<FeatureVector> streamed;
    for (std::size_t b = 0; b < 12; ++b) {
        auto emb = stream.push_block(std::span<const Frame>(frames.data() + b * 8, 8));
        CHECK(emb.size() == 2);
        streamed.insert(streamed.end(), emb.begin(), emb.end());
    }
    CHECK(streamed == whole);
}

TEST_CASE("l1 distill loss basics") {
    const std::vector<FeatureVector> a{{0.1, 0.4}, {-0.2, 0.3}, {0.5, 0.0}};
    CHECK(l1_distill_loss(a, a) == 0.0);

    std::vector<FeatureVector> plus1 = a;
    for (auto& v : plus1)
        for (auto& x : v) x += 1.0;
    CHECK(l1_distill_loss(plus1, a) == doctest::Approx(1.0));

    const std::vector<FeatureVector> b{{0.3, 0.1}, {0.0, 0.3}, {0.2, -0.4}};
    CHECK(l1_distill_loss(a, b) == doctest::Approx(l1_oracle(a, b)));
    CHECK(l1_distill_loss(a, b) == doctest::Approx(1.4 / 6.0));

    CHECK_THROWS_AS(l1_distill_loss(a, {{1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(l1_distill_loss(a, {{1.0}, {2.0}, {3.0}}), std::invalid_argument);
}

TEST_CASE("l1 distill loss with an alignment map") {
    const std::vector<FeatureVector> teacher{{1.0, 2.0, 3.0}};
    const std::vector<FeatureVector> student{{3.0, 1.0}};
    // align: picks [v2, v0] from the teacher
    const std::vector<std::vector<double>> align{{0, 0, 1}, {1, 0, 0}};
    CHECK(l1_distill_loss(student, teacher, align) == doctest::Approx(0.0));
}

TEST_CASE("l1 distill loss is symmetric and satisfies the triangle inequality") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<FeatureVector> a(4, FeatureVector(5)), b = a, c = a;
        for (auto* seq : {&a, &b, &c})
            for (auto& v : *seq)
                for (auto& x : v) x = u(rng);
        CHECK(l1_distill_loss(a, b) == doctest::Approx(l1_distill_loss(b, a)));
        CHECK(l1_distill_loss(a, c) <=
              l1_distill_loss(a, b) + l1_distill_loss(b, c) + 1e-12);
        if (a != b) CHECK(l1_distill_loss(a, b) > 0.0);
    }
}

TEST_CASE("end-to-end rate over whole blocks") {
    std::mt19937_64 rng(5);
    for (int blocks : {1, 3, 10}) {
        const auto frames = random_frames(rng, static_cast<std::size_t>(blocks) * 8);
        const auto out = concat_pairs_50_to_25(downsample_100_to_50(frames).vectors);
        CHECK(out.size() == static_cast<std::size_t>(2 * blocks));
    }
}
