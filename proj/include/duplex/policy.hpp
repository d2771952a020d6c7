#ifndef DUPLEX_POLICY_HPP
#define DUPLEX_POLICY_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "duplex/interleave.hpp"
#include "duplex/timebase.hpp"

namespace duplex {

// Per-block context features. Echo influence is confined to echo_energy so a
// policy that masks that slot is echo-invariant by construction.
struct BlockFeatures {
    double env_activity = 0.0;      // mean foreground activity
    double spk_user = 0.0;          // fraction of frames per speaker
    double spk_third = 0.0;
    double spk_none = 1.0;          // no foreground speech (silence or echo only)
    double relevance = 0.0;         // mean foreground relevance
    double echo_energy = 0.0;       // mean energy over assistant-echo frames
    double asst_playing = 0.0;
    double text_done = 1.0;         // 1 when no response text is outstanding
    double since_transition = 0.0;  // min(1, blocks/25)

    static constexpr int kDim = 9;
    std::array<double, kDim> to_array() const;
};

BlockFeatures compute_block_features(std::span<const Frame> env_frames, bool asst_playing,
                                     bool text_done, std::int64_t blocks_since_transition,
                                     bool use_echo_energy = true);

// Sliding window of the last K block feature vectors, zero-padded at the
// start of a conversation; flattened oldest-first, current block last.
class FeatureHistory {
  public:
    explicit FeatureHistory(int window) : window_(window) {}

    void push(const BlockFeatures& f);
    void reset();
    std::vector<double> flat() const;

    int window() const { return window_; }
    int dim() const { return window_ * BlockFeatures::kDim; }

  private:
    int window_;
    std::deque<std::array<double, BlockFeatures::kDim>> recent_;
};

// Head index 0 maps to Think (explicit family) or Listen (implicit); index 1
// to Shift or Speak; index 2 to a text token. Argmax ties break toward the
// lowest index.
enum class PolicyAction { EmitHold = 0, EmitShift = 1, EmitText = 2 };

constexpr int kActionCount = 3;

std::string to_string(PolicyAction a);

// Two-layer tanh scorer over block context features. Deterministic forward
// pass; serializes and reloads bit-exactly.
struct PolicyModel {
    StrategyKind strategy = StrategyKind::Explicit;
    int input_dim = 0;
    int hidden_dim = 0;
    int history_blocks = 0;
    std::string version = "1";
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // kActionCount x hidden_dim, row-major
    std::vector<double> b2;  // kActionCount

    std::size_t parameter_count() const;
    bool operator==(const PolicyModel&) const = default;
};

PolicyModel init_policy(int input_dim, int hidden_dim, StrategyKind strategy,
                        std::uint64_t seed, int history_blocks = 8);

std::array<double, kActionCount> policy_logits(const PolicyModel& m,
                                               std::span<const double> features);

// Softmax of the logits; positive, sums to 1 within 1e-9.
std::array<double, kActionCount> policy_forward(const PolicyModel& m,
                                                std::span<const double> features);

PolicyAction policy_argmax(const PolicyModel& m, std::span<const double> features);

struct TrainExample {
    std::vector<double> features;
    int gold = 0;  // action index
    double weight = 1.0;
};

struct SftOptions {
    double lr = 0.01;
    int steps = 500;
    int batch = 64;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.95;
    double adam_eps = 1e-8;
};

struct TrainReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double train_accuracy = 0.0;
    std::vector<std::pair<int, double>> loss_curve;  // (step, loss) samples
};

// Mean of weight * cross-entropy over the batch (negative weights flip the
// gradient sign, per the ExplicitNS scheme).
double weighted_ce_loss(const PolicyModel& m, std::span<const TrainExample> batch);

// Adam on the weighted cross-entropy. Throws on non-finite loss.
TrainReport train_supervised(PolicyModel& model, std::span<const TrainExample> dataset,
                             const SftOptions& opts);

double dataset_accuracy(const PolicyModel& m, std::span<const TrainExample> dataset);

struct PreferencePair {
    std::vector<double> context;
    int chosen = 0;
    int rejected = 0;  // must differ from chosen
};

struct DpoOptions {
    double beta = 0.1;
    double lr = 1e-6;
    double lambda_sft = 0.5;  // weight of the retained-SFT cross-entropy term
};

// Mean over pairs of -log sigmoid(beta * ((log pi(c|x) - log ref(c|x)) -
// (log pi(r|x) - log ref(r|x)))).
double dpo_loss(const PolicyModel& m, const PolicyModel& ref,
                std::span<const PreferencePair> pairs, double beta);

struct DpoStepResult {
    double total_loss = 0.0;
    double preference_loss = 0.0;
    double sft_loss = 0.0;
};

// One gradient step on dpo_loss + lambda * weighted CE over the retained SFT
// batch. The reference model stays frozen.
DpoStepResult dpo_step(PolicyModel& model, const PolicyModel& reference,
                       std::span<const PreferencePair> pairs,
                       std::span<const TrainExample> sft_batch, const DpoOptions& opts);

// Maximum guarded relative error between analytic gradients and central
// finite differences (step h) over every parameter.
double gradcheck_ce(const PolicyModel& m, std::span<const TrainExample> batch, double h = 1e-5);
double gradcheck_dpo(const PolicyModel& m, const PolicyModel& ref,
                     std::span<const PreferencePair> pairs, double beta,
                     std::span<const TrainExample> sft_batch, double lambda_sft, double h = 1e-5);

// Model file IO (JSON with schema version, strategy tag, dimensions and a
// content hash over the weight bytes).
void save_policy(const PolicyModel& m, const std::string& path);
PolicyModel load_policy(const std::string& path);
void write_policy_json(std::ostream& out, const PolicyModel& m);
PolicyModel read_policy_json(std::istream& in);

// What the engine hands a policy each block, beyond the feature vector.
// Ground-truth-driven policies (the oracle) use it; trained ones must not.
struct DecisionContext {
    std::int64_t block_index = 0;
    StatePhase phase = StatePhase::Listening;
    bool response_exhausted = true;
    bool playing = false;
};

class DecisionPolicy {
  public:
    virtual ~DecisionPolicy() = default;
    virtual PolicyAction decide(std::span<const double> features, const DecisionContext& ctx) = 0;
    virtual void reset() {}
};

class ModelPolicy : public DecisionPolicy {
  public:
    explicit ModelPolicy(PolicyModel model) : model_(std::move(model)) {}

    PolicyAction decide(std::span<const double> features, const DecisionContext&) override {
        return policy_argmax(model_, features);
    }

    const PolicyModel& model() const { return model_; }

  private:
    PolicyModel model_;
};

}  // namespace duplex

#endif  // DUPLEX_POLICY_HPP
