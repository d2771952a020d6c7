#ifndef DUPLEX_SIM_HPP
#define DUPLEX_SIM_HPP

#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "duplex/interleave.hpp"
#include "duplex/policy.hpp"
#include "duplex/serde.hpp"
#include "duplex/synth.hpp"
#include "duplex/timebase.hpp"

namespace duplex {

enum class EventKind { UserUtterance, ThirdPartyUtterance, Backchannel, Silence };
enum class EventLabel { TrueBargeIn, FalseBargeIn, Backchannel, TurnEnd, None };
enum class ProbeSetting { None, Independent, Dependent };

std::string to_string(EventKind k);
std::string to_string(EventLabel l);
std::string to_string(ProbeSetting s);
EventKind event_kind_from_string(const std::string& s);
EventLabel event_label_from_string(const std::string& s);
ProbeSetting probe_setting_from_string(const std::string& s);

// Declarative conversation event. Utterances carry a per-block activity
// profile (full utterances taper in their final block — the endpointing cue)
// and per-block transcript symbols for the ASR label schemes.
struct ScenarioEvent {
    EventKind kind = EventKind::Silence;
    std::int64_t start_ms = 0;
    std::int64_t duration_ms = 0;
    double relevance = 0.0;
    EventLabel label = EventLabel::None;
    std::vector<double> activity;  // one value per covered block
    std::vector<int> symbols;      // one symbol per covered block

    std::int64_t end_ms() const { return start_ms + duration_ms; }
};

struct ExpectedTransition {
    std::int64_t block = 0;
    StatePhase to = StatePhase::Speaking;

    bool operator==(const ExpectedTransition&) const = default;
};

enum class SuiteKind { TurnTaking, BargeInIndependent, BargeInDependent, Backchannel, Mixed };

std::string to_string(SuiteKind k);
SuiteKind suite_kind_from_string(const std::string& s);

struct Scenario {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<ScenarioEvent> events;  // time-ordered
    double echo_factor = 0.0;           // suite default; eval settings may override
    std::vector<ExpectedTransition> expected_transitions;
    int probe_event = -1;  // index of the barge-in/backchannel/silence probe
    ProbeSetting probe_setting = ProbeSetting::None;
    int response_blocks = 8;  // planned response length in text tokens
    std::string suite_kind;

    std::int64_t last_event_end_ms() const;
};

std::vector<Scenario> generate_suite(SuiteKind kind, int count, std::uint64_t seed);

// Echo frames for one block of assistant playback: speaker becomes
// AssistantEcho, energy scales by factor. Factor 0 contributes nothing.
std::vector<Frame> echo_inject(std::span<const Frame> asst_playback, double factor);

struct PlaybackEventRecord {
    std::string type;  // speech_start | speech_chunk | speech_end | speech_truncated
    std::int64_t t_ms = 0;
    int tokens = 0;
    std::int64_t duration_ms = 0;
    std::int64_t dropped_ms = 0;

    bool operator==(const PlaybackEventRecord&) const = default;
};

struct BlockRecord {
    std::int64_t block = 0;
    StatePhase state = StatePhase::Listening;  // state during this block
    Token token;                               // emitted at the block's end
    bool protocol_violation = false;
    BlockFeatures features;
    std::vector<PlaybackEventRecord> events;
    std::vector<Frame> env_frames;  // kept for sequence construction
    std::vector<Frame> asst_frames;
};

struct Transcript {
    std::string scenario_id;
    std::uint64_t scenario_seed = 0;
    std::string config_hash;
    StrategyKind strategy = StrategyKind::Explicit;
    double echo_factor = 0.0;
    int block_ms = 80;
    std::vector<BlockRecord> records;
    int protocol_violations = 0;
};

struct SimParams {
    TimingConfig timing;
    FrontendConfig frontend;
    StrategyKind strategy = StrategyKind::Explicit;
    std::optional<double> echo_factor;  // nullopt: use the scenario's factor
    int echo_delay_blocks = 1;
    std::int64_t grace_ms = 2000;
    int history_blocks = 8;
    bool use_echo_feature = true;
    std::string config_hash;
};

// Executes the closed loop block by block: assemble env frames from events
// plus delayed echo, assemble asst frames from playback, compute features,
// query the policy, update the state machine and the synth scheduler, log.
Transcript run_conversation(const Scenario& scenario, DecisionPolicy& policy,
                            const SimParams& params);

// Stepwise form of the same loop. The scenario is held by reference so an
// interactive session may append events that start at or after the next
// block; past blocks are immutable.
class ConversationEngine {
  public:
    ConversationEngine(const Scenario& scenario, DecisionPolicy& policy, SimParams params);

    const BlockRecord& step();
    std::int64_t next_block() const { return next_block_; }
    const Transcript& transcript() const { return transcript_; }
    Transcript take_transcript() { return std::move(transcript_); }
    StatePhase phase() const { return state_.phase; }
    std::int64_t buffered_ms() const { return playback_.buffered_ms; }

  private:
    const Scenario& scenario_;
    DecisionPolicy& policy_;
    SimParams params_;
    double echo_factor_ = 0.0;
    bool asr_strategy_ = false;

    Transcript transcript_;
    DialogueState state_;
    PlaybackState playback_;
    FeatureHistory history_;
    std::vector<std::vector<Frame>> asst_history_;
    bool was_playing_ = false;
    std::int64_t next_block_ = 0;

    struct ResponsePlan {
        bool active = false;
        int total = 0;
        int emitted = 0;
        int next_symbol = 1;
        bool exhausted() const { return !active || emitted >= total; }
    } plan_;
};

// Perfect actions from scenario ground truth: Shift exactly at expected
// transition blocks, Text through the planned response, Hold elsewhere.
// Holds the scenario by reference so transitions appended during an
// interactive session are honored.
class OraclePolicy : public DecisionPolicy {
  public:
    OraclePolicy(const Scenario& scenario, StrategyKind strategy);

    PolicyAction decide(std::span<const double> features, const DecisionContext& ctx) override;

  private:
    bool scripted_shift(std::int64_t block) const;

    const Scenario* scenario_;
    StrategyKind strategy_;
};

// Dialogue transitions realized in a transcript, derived from per-block
// (state, token) pairs; works for every strategy.
std::vector<ExpectedTransition> realized_transitions(const Transcript& t);

// Ground-truth block phases of a transcript (Listen / ShiftToSpeak / ...).
std::vector<BlockTruthRecord> derive_truth(const Scenario& scenario, const Transcript& t);

// Supervised examples for one conversation: oracle run -> label scheme ->
// (history-window features, gold action class, loss weight).
struct TrainingDataOptions {
    double ns_weight = 0.1;
    double transition_upweight = 10.0;  // rare-class emphasis for Shift blocks
    double bias_interrupt = 0.0;  // corrupt this fraction of negative-probe windows
    std::uint64_t bias_seed = 0;
};

std::vector<TrainExample> build_training_data(const Scenario& scenario, const SimParams& params,
                                              const TrainingDataOptions& opts);

// DPO preference pairs from a probe scenario's decision window.
std::vector<PreferencePair> build_preference_pairs(const Scenario& scenario,
                                                   const SimParams& params,
                                                   std::int64_t window_blocks = 6);

// Scenario / transcript serialization.
json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const json& j);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

// Suite directory layout: manifest.json plus scenarios/<id>.json.
struct LoadedSuite {
    std::vector<Scenario> scenarios;
    json manifest;
    std::string manifest_hash;
};

// Writes the suite and returns the manifest (ids, seeds, label counts).
json save_suite(const std::vector<Scenario>& suite, SuiteKind kind, std::uint64_t seed,
                const std::string& dir);
LoadedSuite load_suite(const std::string& dir);
json suite_label_counts(const std::vector<Scenario>& suite);

void write_transcript_jsonl(std::ostream& out, const Transcript& t);
Transcript read_transcript_jsonl(std::istream& in);
void save_transcript(const Transcript& t, const std::string& path);
Transcript load_transcript(const std::string& path);

}  // namespace duplex

#endif  // DUPLEX_SIM_HPP
