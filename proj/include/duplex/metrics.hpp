#ifndef DUPLEX_METRICS_HPP
#define DUPLEX_METRICS_HPP

#include <optional>

#include "duplex/sim.hpp"

namespace duplex {

struct EvalTolerances {
    std::int64_t turn_early_ms = 240;       // onsets earlier than end - early fail
    std::int64_t turn_late_ms = 1000;       // closed upper bound at end + late
    std::int64_t interrupt_window_ms = 480;  // one synthesis chunk
};

struct TurnTakingJudgment {
    std::string scenario_id;
    std::int64_t utterance_end_ms = 0;
    std::optional<std::int64_t> speak_onset_ms;
    bool success = false;
    std::optional<std::int64_t> latency_ms;
};

struct InterruptJudgment {
    std::string scenario_id;
    ProbeSetting setting = ProbeSetting::None;
    bool positive = false;
    bool stopped = false;
    std::optional<std::int64_t> decision_latency_blocks;
};

// Requires exactly one TurnEnd-labeled event. Onset is the first audible
// speech; success means onset in (end - early_tol, end + late_tol].
TurnTakingJudgment judge_turn_taking(const Scenario& scenario, const Transcript& t,
                                     std::int64_t early_tol_ms = 240,
                                     std::int64_t late_tol_ms = 1000);

// Judges the scenario's probe; nullopt when the scenario has none. "Stopped"
// requires a Speaking->Listening transition within the decision window after
// probe onset.
std::optional<InterruptJudgment> judge_interrupt(const Scenario& scenario, const Transcript& t,
                                                 std::int64_t window_ms = 480);

double turn_taking_success(std::span<const TurnTakingJudgment> judgments);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
};

ConfusionCounts count_judgments(std::span<const InterruptJudgment> judgments);

// Undefined denominators (no positives, or no predicted positives) throw
// rather than silently producing zeros.
Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);
Prf interruption_prf(std::span<const InterruptJudgment> judgments);

// Arithmetic mean of the two per-setting F1 scores.
double overall_f1(double f1_independent, double f1_dependent);

struct LatencySummary {
    std::size_t count = 0;
    double mean = 0.0;
    std::int64_t p50 = 0;  // lower median
    std::int64_t p95 = 0;
};

LatencySummary summarize_latencies(std::vector<std::int64_t> values);

struct LatencyReport {
    LatencySummary turn_taking;        // over successful turn-taking judgments, ms
    LatencySummary interrupt_blocks;   // over stopped positives, blocks
    std::size_t excluded_turn_taking = 0;
    std::size_t excluded_interrupt = 0;
};

LatencyReport latency_report(std::span<const TurnTakingJudgment> turns,
                             std::span<const InterruptJudgment> interrupts);

// Per-setting metrics with explicit undefined markers instead of fake zeros.
struct SettingReport {
    std::size_t judged = 0;
    ConfusionCounts counts;
    std::optional<Prf> prf;
    std::string undefined_reason;  // set when prf is undefined
};

struct EvalReport {
    std::string suite_manifest_hash;
    std::string config_hash;
    std::string engine_version;
    double echo_factor = 0.0;
    EvalTolerances tolerances;
    std::size_t conversations = 0;
    int protocol_violations = 0;
    std::size_t turn_taking_judged = 0;
    double turn_taking_rate = 0.0;
    SettingReport independent;
    SettingReport dependent;
    std::optional<double> overall;
    LatencyReport latency;
};

EvalReport evaluate_suite(std::span<const Scenario> scenarios,
                          std::span<const Transcript> transcripts, const EvalTolerances& tol);

json report_to_json(const EvalReport& r);
std::string report_to_text(const EvalReport& r);

}  // namespace duplex

#endif  // DUPLEX_METRICS_HPP
