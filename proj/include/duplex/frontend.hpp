#ifndef DUPLEX_FRONTEND_HPP
#define DUPLEX_FRONTEND_HPP

#include <span>
#include <vector>

#include "duplex/timebase.hpp"

namespace duplex {

using FeatureVector = std::vector<double>;

// Streaming, causal stand-in for the encoder frontend. The rate contract is
// what matters: 100 Hz frames -> 50 Hz vectors -> 25 Hz embeddings.
struct FrontendConfig {
    int dim = 8;               // per-frame projection width
    double ema_fast_ms = 160;  // half-life of the short-horizon activity EMA
    double ema_slow_ms = 640;  // half-life of the medium-horizon activity EMA
    double tap0 = 0.5;         // stride-2 two-tap weights, tap0 + tap1 == 1
    double tap1 = 0.5;

    bool operator==(const FrontendConfig&) const = default;
};

void validate(const FrontendConfig& cfg);

struct DownsampleResult {
    std::vector<FeatureVector> vectors;
    bool padded = false;  // trailing frame was repeated to even the length
};

// 100 Hz -> 50 Hz. Output i is the two-tap average of the projections of
// frames 2i and 2i+1; EMAs run causally from the first frame (initialized to
// its value, so constant input projects to itself).
DownsampleResult downsample_100_to_50(std::span<const Frame> frames,
                                      const FrontendConfig& cfg = {});

// 50 Hz -> 25 Hz by concatenating adjacent pairs; output dimension doubles.
// Odd input length is rejected.
std::vector<FeatureVector> concat_pairs_50_to_25(const std::vector<FeatureVector>& vecs);

// Mean absolute elementwise difference. Shapes must match exactly.
double l1_distill_loss(const std::vector<FeatureVector>& student,
                       const std::vector<FeatureVector>& teacher);

// Variant with a linear alignment map applied to the teacher first
// (align is row-major, student_dim x teacher_dim).
double l1_distill_loss(const std::vector<FeatureVector>& student,
                       const std::vector<FeatureVector>& teacher,
                       const std::vector<std::vector<double>>& align);

// Per-stream accumulator: carries EMA state across blocks so embeddings are
// identical whether frames arrive block-by-block or all at once. One
// instance per stream, never shared.
class FrontendStream {
  public:
    FrontendStream(FrontendConfig cfg, TimingConfig timing);

    // Consumes exactly one block of frames, returns frames_per_block()/4
    // embeddings of dimension 2*dim.
    std::vector<FeatureVector> push_block(std::span<const Frame> frames);

    void reset();

    int embedding_dim() const { return 2 * cfg_.dim; }
    int embeddings_per_block() const { return timing_.frames_per_block() / 4; }

  private:
    FeatureVector project(const Frame& f);

    FrontendConfig cfg_;
    TimingConfig timing_;
    double ema_fast_ = 0.0;
    double ema_slow_ = 0.0;
    bool primed_ = false;
};

}  // namespace duplex

#endif  // DUPLEX_FRONTEND_HPP
