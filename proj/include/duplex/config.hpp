#ifndef DUPLEX_CONFIG_HPP
#define DUPLEX_CONFIG_HPP

#include "duplex/metrics.hpp"

namespace duplex {

// Resolved operator configuration. Every run's report embeds the hash of the
// canonical serialized form.
struct EngineConfig {
    TimingConfig timing;
    StrategyKind strategy = StrategyKind::Explicit;
    std::string policy_path;
    EvalTolerances tolerances;

    struct Echo {
        double factor = -1.0;  // -1: use each scenario's own factor
        int delay_blocks = 1;
    } echo;

    std::uint64_t seed = 0;

    struct Features {
        int history_blocks = 8;
        bool use_echo_energy = true;
    } features;

    struct Sim {
        std::int64_t grace_ms = 2000;
    } sim;

    struct Training {
        int hidden_dim = 16;
        double sft_lr = 0.01;
        int sft_steps = 2000;
        int sft_batch = 64;
        double transition_upweight = 10.0;
        double dpo_beta = 0.1;
        double dpo_lr = 1e-6;  // config default; desk-scale runs pass --dpo-lr
        double dpo_lambda = 0.5;
        int dpo_steps = 40;
        int dpo_batch = 256;
        double ns_weight = 0.1;
    } training;
};

void validate(const EngineConfig& cfg);

json engine_config_to_json(const EngineConfig& cfg);
EngineConfig engine_config_from_json(const json& j);
EngineConfig load_engine_config(const std::string& path);
void save_engine_config(const EngineConfig& cfg, const std::string& path);

// FNV-1a over the canonical serialized config.
std::string config_hash(const EngineConfig& cfg);

SimParams sim_params_from(const EngineConfig& cfg);

}  // namespace duplex

#endif  // DUPLEX_CONFIG_HPP
