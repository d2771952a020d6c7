#include "duplex/frontend.hpp"

#include <cmath>
#include <stdexcept>

namespace duplex {

namespace {

double ema_alpha(double half_life_ms) {
    // (1 - alpha)^(half_life / 10ms) == 0.5
    return 1.0 - std::pow(0.5, kFrameMs / half_life_ms);
}

struct EmaState {
    double fast = 0.0;
    double slow = 0.0;
    bool primed = false;

    void update(double x, const FrontendConfig& cfg) {
        if (!primed) {
            fast = slow = x;
            primed = true;
            return;
        }
        fast += ema_alpha(cfg.ema_fast_ms) * (x - fast);
        slow += ema_alpha(cfg.ema_slow_ms) * (x - slow);
    }
};

FeatureVector project_frame(const Frame& f, const EmaState& ema, const FrontendConfig& cfg) {
    FeatureVector v(static_cast<std::size_t>(cfg.dim), 0.0);
    v[0] = f.activity;
    v[1] = f.energy;
    v[2] = f.speaker == Speaker::User ? 1.0 : 0.0;
    v[3] = f.speaker == Speaker::ThirdParty ? 1.0 : 0.0;
    v[4] = f.speaker == Speaker::AssistantEcho ? 1.0 : 0.0;
    v[5] = f.relevance;
    v[6] = ema.fast;
    v[7] = ema.slow;
    return v;
}

FeatureVector two_tap(const FeatureVector& a, const FeatureVector& b, const FrontendConfig& cfg) {
    FeatureVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = cfg.tap0 * a[i] + cfg.tap1 * b[i];
    return out;
}

}  // namespace

void validate(const FrontendConfig& cfg) {
    if (cfg.dim != 8) throw std::invalid_argument("frontend projection dim is fixed at 8");
    if (cfg.ema_fast_ms <= 0 || cfg.ema_slow_ms <= 0)
        throw std::invalid_argument("EMA half-lives must be positive");
    if (std::abs(cfg.tap0 + cfg.tap1 - 1.0) > 1e-12)
        throw std::invalid_argument("downsample taps must sum to 1");
}

DownsampleResult downsample_100_to_50(std::span<const Frame> frames, const FrontendConfig& cfg) {
    validate(cfg);
    DownsampleResult res;
    if (frames.empty()) return res;

    EmaState ema;
    std::vector<FeatureVector> projected;
    projected.reserve(frames.size() + 1);
    for (const auto& f : frames) {
        ema.update(f.activity, cfg);
        projected.push_back(project_frame(f, ema, cfg));
    }
    if (projected.size() % 2 != 0) {
        projected.push_back(projected.back());
        res.padded = true;
    }
    res.vectors.reserve(projected.size() / 2);
    for (std::size_t i = 0; i + 1 < projected.size(); i += 2)
        res.vectors.push_back(two_tap(projected[i], projected[i + 1], cfg));
    return res;
}

std::vector<FeatureVector> concat_pairs_50_to_25(const std::vector<FeatureVector>& vecs) {
    if (vecs.size() % 2 != 0)
        throw std::invalid_argument("concat_pairs_50_to_25 requires an even input length");
    std::vector<FeatureVector> out;
    out.reserve(vecs.size() / 2);
    for (std::size_t i = 0; i + 1 < vecs.size(); i += 2) {
        FeatureVector v;
        v.reserve(vecs[i].size() + vecs[i + 1].size());
        v.insert(v.end(), vecs[i].begin(), vecs[i].end());
        v.insert(v.end(), vecs[i + 1].begin(), vecs[i + 1].end());
        out.push_back(std::move(v));
    }
    return out;
}

double l1_distill_loss(const std::vector<FeatureVector>& student,
                       const std::vector<FeatureVector>& teacher) {
    if (student.size() != teacher.size())
        throw std::invalid_argument("l1_distill_loss: sequence lengths differ");
    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < student.size(); ++i) {
        if (student[i].size() != teacher[i].size())
            throw std::invalid_argument("l1_distill_loss: vector dimensions differ");
        for (std::size_t j = 0; j < student[i].size(); ++j) {
            sum += std::abs(student[i][j] - teacher[i][j]);
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double l1_distill_loss(const std::vector<FeatureVector>& student,
                       const std::vector<FeatureVector>& teacher,
                       const std::vector<std::vector<double>>& align) {
    std::vector<FeatureVector> mapped;
    mapped.reserve(teacher.size());
    for (const auto& t : teacher) {
        FeatureVector v(align.size(), 0.0);
        for (std::size_t r = 0; r < align.size(); ++r) {
            if (align[r].size() != t.size())
                throw std::invalid_argument("l1_distill_loss: alignment map width mismatch");
            for (std::size_t c = 0; c < t.size(); ++c) v[r] += align[r][c] * t[c];
        }
        mapped.push_back(std::move(v));
    }
    return l1_distill_loss(student, mapped);
}

FrontendStream::FrontendStream(FrontendConfig cfg, TimingConfig timing)
    : cfg_(cfg), timing_(timing) {
    validate(cfg_);
    validate(timing_);
    if (timing_.frames_per_block() % 4 != 0)
        throw std::invalid_argument("block_ms must be a multiple of 40 ms for 25 Hz embeddings");
}

FeatureVector FrontendStream::project(const Frame& f) {
    EmaState ema{ema_fast_, ema_slow_, primed_};
    ema.update(f.activity, cfg_);
    ema_fast_ = ema.fast;
    ema_slow_ = ema.slow;
    primed_ = ema.primed;
    return project_frame(f, ema, cfg_);
}

std::vector<FeatureVector> FrontendStream::push_block(std::span<const Frame> frames) {
    if (frames.size() != static_cast<std::size_t>(timing_.frames_per_block()))
        throw std::invalid_argument("push_block expects exactly one block of frames");
    std::vector<FeatureVector> projected;
    projected.reserve(frames.size());
    for (const auto& f : frames) projected.push_back(project(f));

    std::vector<FeatureVector> at50;
    at50.reserve(projected.size() / 2);
    for (std::size_t i = 0; i + 1 < projected.size(); i += 2)
        at50.push_back(two_tap(projected[i], projected[i + 1], cfg_));
    return concat_pairs_50_to_25(at50);
}

void FrontendStream::reset() {
    ema_fast_ = ema_slow_ = 0.0;
    primed_ = false;
}

}  // namespace duplex
