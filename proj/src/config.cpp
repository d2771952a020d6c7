#include "duplex/config.hpp"

#include <fstream>

#include "duplex/serde.hpp"

namespace duplex {

void validate(const EngineConfig& cfg) {
    try {
        validate(cfg.timing);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("timing: ") + e.what());
    }
    if (cfg.timing.block_ms % 40 != 0)
        throw ConfigError("timing: block_ms must be a multiple of 40 ms");
    if (cfg.tolerances.turn_early_ms < 0 || cfg.tolerances.turn_late_ms < 0)
        throw ConfigError("tolerances must be non-negative");
    if (cfg.tolerances.interrupt_window_ms < cfg.timing.block_ms)
        throw ConfigError("interrupt window must cover at least one block");
    if (cfg.echo.factor < 0.0 && cfg.echo.factor != -1.0)
        throw ConfigError("echo factor must be non-negative (or -1 to defer to the scenario)");
    if (cfg.echo.delay_blocks < 1) throw ConfigError("echo delay must be at least one block");
    if (cfg.features.history_blocks < 1) throw ConfigError("history_blocks must be positive");
    if (cfg.sim.grace_ms < 0) throw ConfigError("grace_ms must be non-negative");
    const auto& tr = cfg.training;
    if (tr.hidden_dim < 1 || tr.sft_lr <= 0 || tr.sft_steps < 1 || tr.sft_batch < 1 ||
        tr.dpo_beta <= 0 || tr.dpo_lr <= 0 || tr.dpo_steps < 1 || tr.dpo_batch < 1 ||
        tr.ns_weight <= 0 || tr.dpo_lambda < 0 || tr.transition_upweight <= 0)
        throw ConfigError("training hyperparameters out of range");
}

json engine_config_to_json(const EngineConfig& cfg) {
    return json{
        {"schema_version", kSchemaVersion},
        {"kind", "engine_config"},
        {"timing", cfg.timing},
        {"strategy", to_string(cfg.strategy)},
        {"policy_path", cfg.policy_path},
        {"tolerances",
         {{"turn_early_ms", cfg.tolerances.turn_early_ms},
          {"turn_late_ms", cfg.tolerances.turn_late_ms},
          {"interrupt_window_ms", cfg.tolerances.interrupt_window_ms}}},
        {"echo", {{"factor", cfg.echo.factor}, {"delay_blocks", cfg.echo.delay_blocks}}},
        {"seed", cfg.seed},
        {"features",
         {{"history_blocks", cfg.features.history_blocks},
          {"use_echo_energy", cfg.features.use_echo_energy}}},
        {"sim", {{"grace_ms", cfg.sim.grace_ms}}},
        {"training",
         {{"hidden_dim", cfg.training.hidden_dim},
          {"sft_lr", cfg.training.sft_lr},
          {"sft_steps", cfg.training.sft_steps},
          {"sft_batch", cfg.training.sft_batch},
          {"transition_upweight", cfg.training.transition_upweight},
          {"dpo_beta", cfg.training.dpo_beta},
          {"dpo_lr", cfg.training.dpo_lr},
          {"dpo_lambda", cfg.training.dpo_lambda},
          {"dpo_steps", cfg.training.dpo_steps},
          {"dpo_batch", cfg.training.dpo_batch},
          {"ns_weight", cfg.training.ns_weight}}}};
}

EngineConfig engine_config_from_json(const json& j) {
    check_schema_version(j, "engine_config");
    if (j.value("kind", "") != "engine_config") throw ConfigError("not an engine_config file");
    reject_unknown_keys(j,
                        {"schema_version", "kind", "timing", "strategy", "policy_path",
                         "tolerances", "echo", "seed", "features", "sim", "training"},
                        "engine_config");
    EngineConfig cfg;
    if (j.contains("timing")) cfg.timing = j.at("timing").get<TimingConfig>();
    if (j.contains("strategy"))
        cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("policy_path")) cfg.policy_path = j.at("policy_path").get<std::string>();
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        reject_unknown_keys(t, {"turn_early_ms", "turn_late_ms", "interrupt_window_ms"},
                            "tolerances");
        cfg.tolerances.turn_early_ms = t.value("turn_early_ms", cfg.tolerances.turn_early_ms);
        cfg.tolerances.turn_late_ms = t.value("turn_late_ms", cfg.tolerances.turn_late_ms);
        cfg.tolerances.interrupt_window_ms =
            t.value("interrupt_window_ms", cfg.tolerances.interrupt_window_ms);
    }
    if (j.contains("echo")) {
        const auto& e = j.at("echo");
        reject_unknown_keys(e, {"factor", "delay_blocks"}, "echo");
        cfg.echo.factor = e.value("factor", cfg.echo.factor);
        cfg.echo.delay_blocks = e.value("delay_blocks", cfg.echo.delay_blocks);
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("features")) {
        const auto& f = j.at("features");
        reject_unknown_keys(f, {"history_blocks", "use_echo_energy"}, "features");
        cfg.features.history_blocks = f.value("history_blocks", cfg.features.history_blocks);
        cfg.features.use_echo_energy = f.value("use_echo_energy", cfg.features.use_echo_energy);
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        reject_unknown_keys(s, {"grace_ms"}, "sim");
        cfg.sim.grace_ms = s.value("grace_ms", cfg.sim.grace_ms);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        reject_unknown_keys(t,
                            {"hidden_dim", "sft_lr", "sft_steps", "sft_batch",
                             "transition_upweight", "dpo_beta", "dpo_lr", "dpo_lambda",
                             "dpo_steps", "dpo_batch", "ns_weight"},
                            "training");
        auto& tr = cfg.training;
        tr.hidden_dim = t.value("hidden_dim", tr.hidden_dim);
        tr.sft_lr = t.value("sft_lr", tr.sft_lr);
        tr.sft_steps = t.value("sft_steps", tr.sft_steps);
        tr.sft_batch = t.value("sft_batch", tr.sft_batch);
        tr.transition_upweight = t.value("transition_upweight", tr.transition_upweight);
        tr.dpo_beta = t.value("dpo_beta", tr.dpo_beta);
        tr.dpo_lr = t.value("dpo_lr", tr.dpo_lr);
        tr.dpo_lambda = t.value("dpo_lambda", tr.dpo_lambda);
        tr.dpo_steps = t.value("dpo_steps", tr.dpo_steps);
        tr.dpo_batch = t.value("dpo_batch", tr.dpo_batch);
        tr.ns_weight = t.value("ns_weight", tr.ns_weight);
    }
    validate(cfg);
    return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    try {
        return engine_config_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void save_engine_config(const EngineConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file: " + path);
    out << engine_config_to_json(cfg).dump(2) << '\n';
}

std::string config_hash(const EngineConfig& cfg) {
    return fnv1a64_hex(engine_config_to_json(cfg).dump());
}

SimParams sim_params_from(const EngineConfig& cfg) {
    SimParams p;
    p.timing = cfg.timing;
    p.strategy = cfg.strategy;
    if (cfg.echo.factor >= 0.0) p.echo_factor = cfg.echo.factor;
    p.echo_delay_blocks = cfg.echo.delay_blocks;
    p.grace_ms = cfg.sim.grace_ms;
    p.history_blocks = cfg.features.history_blocks;
    p.use_echo_feature = cfg.features.use_echo_energy;
    p.config_hash = config_hash(cfg);
    return p;
}

}  // namespace duplex
