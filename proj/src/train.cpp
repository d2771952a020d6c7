#include "duplex/train.hpp"

#include <random>

namespace duplex {

std::vector<TrainExample> build_sft_dataset(std::span<const Scenario> scenarios,
                                            const SimParams& params,
                                            const TrainingDataOptions& opts) {
    std::vector<TrainExample> dataset;
    for (const auto& sc : scenarios) {
        auto examples = build_training_data(sc, params, opts);
        dataset.insert(dataset.end(), std::make_move_iterator(examples.begin()),
                       std::make_move_iterator(examples.end()));
    }
    return dataset;
}

SftRunResult run_sft(const EngineConfig& cfg, std::span<const Scenario> scenarios,
                     double bias_interrupt) {
    if (scenarios.empty()) throw std::invalid_argument("run_sft: no training scenarios");
    const SimParams params = sim_params_from(cfg);
    TrainingDataOptions opts;
    opts.ns_weight = cfg.training.ns_weight;
    opts.transition_upweight = cfg.training.transition_upweight;
    opts.bias_interrupt = bias_interrupt;
    opts.bias_seed = cfg.seed;
    const auto dataset = build_sft_dataset(scenarios, params, opts);

    SftRunResult res;
    res.model = init_policy(BlockFeatures::kDim * cfg.features.history_blocks,
                            cfg.training.hidden_dim, cfg.strategy, cfg.seed,
                            cfg.features.history_blocks);
    SftOptions sft;
    sft.lr = cfg.training.sft_lr;
    sft.steps = cfg.training.sft_steps;
    sft.batch = cfg.training.sft_batch;
    sft.seed = cfg.seed;
    res.report = train_supervised(res.model, dataset, sft);
    return res;
}

MonitorResult monitor_eval(const PolicyModel& model, std::span<const Scenario> independent,
                           std::span<const Scenario> dependent, const EngineConfig& cfg) {
    const SimParams params = sim_params_from(cfg);
    MonitorResult res;
    std::vector<InterruptJudgment> ind, dep;
    std::vector<TurnTakingJudgment> turns;
    auto run_setting = [&](std::span<const Scenario> suite,
                           std::vector<InterruptJudgment>& out) {
        for (const auto& sc : suite) {
            ModelPolicy policy(model);
            const auto t = run_conversation(sc, policy, params);
            if (auto j = judge_interrupt(sc, t, cfg.tolerances.interrupt_window_ms))
                out.push_back(*j);
            bool has_turn_end = false;
            for (const auto& ev : sc.events) has_turn_end |= ev.label == EventLabel::TurnEnd;
            if (has_turn_end)
                turns.push_back(judge_turn_taking(sc, t, cfg.tolerances.turn_early_ms,
                                                  cfg.tolerances.turn_late_ms));
        }
    };
    run_setting(independent, ind);
    run_setting(dependent, dep);
    try {
        if (!ind.empty()) res.independent = interruption_prf(ind);
    } catch (const std::invalid_argument&) {
    }
    try {
        if (!dep.empty()) res.dependent = interruption_prf(dep);
    } catch (const std::invalid_argument&) {
    }
    if (res.independent && res.dependent)
        res.overall = overall_f1(res.independent->f1, res.dependent->f1);
    if (!turns.empty()) res.turn_taking = turn_taking_success(turns);
    return res;
}

DpoRunResult run_dpo(const EngineConfig& cfg, PolicyModel reference,
                     std::span<const Scenario> pair_scenarios,
                     std::span<const Scenario> retained_sft,
                     std::span<const Scenario> monitor_independent,
                     std::span<const Scenario> monitor_dependent, int monitor_every) {
    if (reference.strategy != cfg.strategy)
        throw ConfigError("policy strategy tag does not match the configured strategy");
    const SimParams params = sim_params_from(cfg);

    std::vector<PreferencePair> pool;
    for (const auto& sc : pair_scenarios) {
        auto pairs = build_preference_pairs(
            sc, params, cfg.tolerances.interrupt_window_ms / cfg.timing.block_ms);
        pool.insert(pool.end(), std::make_move_iterator(pairs.begin()),
                    std::make_move_iterator(pairs.end()));
    }
    if (pool.empty()) throw std::invalid_argument("run_dpo: no preference pairs in the data");

    TrainingDataOptions opts;
    opts.ns_weight = cfg.training.ns_weight;
    opts.transition_upweight = cfg.training.transition_upweight;
    const auto retained = build_sft_dataset(retained_sft, params, opts);

    DpoRunResult res;
    res.model = std::move(reference);
    const PolicyModel ref = res.model;  // frozen

    res.rows.push_back(
        {0, 0.0, monitor_eval(res.model, monitor_independent, monitor_dependent, cfg)});

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick_pair(0, pool.size() - 1);
    std::vector<PreferencePair> batch;
    std::vector<TrainExample> sft_batch;

    DpoOptions dpo;
    dpo.beta = cfg.training.dpo_beta;
    dpo.lr = cfg.training.dpo_lr;
    dpo.lambda_sft = cfg.training.dpo_lambda;

    for (int step = 1; step <= cfg.training.dpo_steps; ++step) {
        batch.clear();
        const auto bsz = static_cast<std::size_t>(cfg.training.dpo_batch);
        for (std::size_t i = 0; i < bsz; ++i) batch.push_back(pool[pick_pair(rng)]);
        sft_batch.clear();
        if (!retained.empty() && dpo.lambda_sft > 0.0) {
            std::uniform_int_distribution<std::size_t> pick_ex(0, retained.size() - 1);
            for (int i = 0; i < cfg.training.sft_batch; ++i)
                sft_batch.push_back(retained[pick_ex(rng)]);
        }
        const auto step_res = dpo_step(res.model, ref, batch, sft_batch, dpo);
        if (step % monitor_every == 0 || step == cfg.training.dpo_steps)
            res.rows.push_back({step, step_res.total_loss,
                                monitor_eval(res.model, monitor_independent, monitor_dependent,
                                             cfg)});
    }
    return res;
}

}  // namespace duplex
