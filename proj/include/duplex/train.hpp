#ifndef DUPLEX_TRAIN_HPP
#define DUPLEX_TRAIN_HPP

#include "duplex/config.hpp"

namespace duplex {

// Oracle-driven dataset over a whole suite.
std::vector<TrainExample> build_sft_dataset(std::span<const Scenario> scenarios,
                                            const SimParams& params,
                                            const TrainingDataOptions& opts);

struct SftRunResult {
    PolicyModel model;
    TrainReport report;
};

// Supervised stage: oracle labels, Adam on the weighted cross-entropy.
SftRunResult run_sft(const EngineConfig& cfg, std::span<const Scenario> scenarios,
                     double bias_interrupt = 0.0);

struct MonitorResult {
    std::optional<Prf> independent;
    std::optional<Prf> dependent;
    std::optional<double> overall;
    double turn_taking = 0.0;
};

// Runs the policy over both monitor suites and aggregates the duplex metrics.
MonitorResult monitor_eval(const PolicyModel& model, std::span<const Scenario> independent,
                           std::span<const Scenario> dependent, const EngineConfig& cfg);

struct DpoMonitorRow {
    int step = 0;  // 0 is the pre-training (reference) row
    double loss = 0.0;
    MonitorResult monitor;
};

struct DpoRunResult {
    PolicyModel model;
    std::vector<DpoMonitorRow> rows;  // every monitor_every steps
};

// Preference stage: pairs from the barge-in suites, retained SFT examples
// mixed in, monitor metrics logged on the appendix schedule.
DpoRunResult run_dpo(const EngineConfig& cfg, PolicyModel reference,
                     std::span<const Scenario> pair_scenarios,
                     std::span<const Scenario> retained_sft,
                     std::span<const Scenario> monitor_independent,
                     std::span<const Scenario> monitor_dependent, int monitor_every = 10);

}  // namespace duplex

#endif  // DUPLEX_TRAIN_HPP
