#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "duplex/config.hpp"
#include "duplex/serde.hpp"
#include "duplex/train.hpp"
#include "duplex/version.hpp"

namespace fs = std::filesystem;
using namespace duplex;

// Exit codes: 0 ok, 64 usage, 2 config/validation, 3 io, 4 protocol violation.
namespace {

constexpr int kExitUsage = 64;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitProtocol = 4;

struct CommonOpts {
    std::string config_path;
    std::string strategy_override;
    std::optional<std::uint64_t> seed_override;
};

EngineConfig resolve_config(const CommonOpts& common) {
    EngineConfig cfg;
    std::string path = common.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("DUPLEX_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = load_engine_config(path);
    if (!common.strategy_override.empty())
        cfg.strategy = strategy_from_string(common.strategy_override);
    if (common.seed_override) cfg.seed = *common.seed_override;
    validate(cfg);
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--config", common.config_path,
                    "engine config JSON (default: $DUPLEX_CONFIG)");
    cmd->add_option("--strategy", common.strategy_override,
                    "override the thinking strategy (implicit|explicit|implicit_asr|"
                    "explicit_asr|explicit_ns)");
    cmd->add_option("--seed", common.seed_override, "override the config seed");
}

std::unique_ptr<DecisionPolicy> make_policy(const EngineConfig& cfg, const std::string& model_path,
                                            bool oracle, const Scenario& scenario) {
    if (oracle) return std::make_unique<OraclePolicy>(scenario, cfg.strategy);
    PolicyModel model = load_policy(model_path);
    if (model.strategy != cfg.strategy)
        throw ConfigError("model strategy '" + to_string(model.strategy) +
                          "' does not match configured strategy '" + to_string(cfg.strategy) +
                          "'");
    return std::make_unique<ModelPolicy>(std::move(model));
}

int cmd_generate(const std::string& kind_str, int count, std::uint64_t seed,
                 const std::string& out_dir) {
    const SuiteKind kind = suite_kind_from_string(kind_str);
    const auto suite = generate_suite(kind, count, seed);
    const auto manifest = save_suite(suite, kind, seed, out_dir);
    std::cout << "wrote " << suite.size() << " scenarios to " << out_dir << "\n"
              << "label counts: " << manifest.at("label_counts").dump() << "\n";
    return 0;
}

json monitor_to_json(const MonitorResult& m) {
    auto prf_json = [](const std::optional<Prf>& p) {
        if (!p) return json(nullptr);
        return json{{"precision", p->precision}, {"recall", p->recall}, {"f1", p->f1}};
    };
    return json{{"independent", prf_json(m.independent)},
                {"dependent", prf_json(m.dependent)},
                {"overall_f1", m.overall ? json(*m.overall) : json(nullptr)},
                {"turn_taking", m.turn_taking}};
}

int cmd_train(const EngineConfig& cfg, const std::string& mode, const std::string& data_dir,
              const std::string& out_model, const std::string& init_model,
              const std::string& monitor_ind_dir, const std::string& monitor_dep_dir,
              double bias_interrupt, const std::string& log_path) {
    const auto data = load_suite(data_dir);
    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw IoError("cannot write training log: " + log_path);
    }

    if (mode == "sft") {
        const auto res = run_sft(cfg, data.scenarios, bias_interrupt);
        save_policy(res.model, out_model);
        if (log) {
            for (const auto& [step, loss] : res.report.loss_curve)
                log << json{{"step", step}, {"loss", loss}}.dump() << '\n';
            log << json{{"final_loss", res.report.final_loss},
                        {"initial_loss", res.report.initial_loss},
                        {"final_accuracy", res.report.train_accuracy}}
                       .dump()
                << '\n';
        }
        std::cout << "sft: loss " << res.report.initial_loss << " -> " << res.report.final_loss
                  << ", training accuracy " << res.report.train_accuracy << "\n"
                  << "model written to " << out_model << "\n";
        return 0;
    }
    if (mode != "dpo") throw ConfigError("unknown training mode: " + mode);

    if (init_model.empty()) throw ConfigError("dpo requires --init <sft model>");
    if (monitor_ind_dir.empty() || monitor_dep_dir.empty())
        throw ConfigError("dpo requires --monitor-independent and --monitor-dependent suites");
    PolicyModel reference = load_policy(init_model);
    const auto mon_ind = load_suite(monitor_ind_dir);
    const auto mon_dep = load_suite(monitor_dep_dir);
    const auto res = run_dpo(cfg, std::move(reference), data.scenarios, data.scenarios,
                             mon_ind.scenarios, mon_dep.scenarios);
    save_policy(res.model, out_model);
    for (const auto& row : res.rows) {
        json line{{"step", row.step}, {"loss", row.loss}, {"monitor", monitor_to_json(row.monitor)}};
        if (log) log << line.dump() << '\n';
        std::cout << "step " << row.step << ": "
                  << (row.monitor.overall ? "overall F1 " + std::to_string(*row.monitor.overall)
                                          : std::string("overall F1 undefined"))
                  << "\n";
    }
    std::cout << "model written to " << out_model << "\n";
    return 0;
}

int cmd_eval(const EngineConfig& base_cfg, const std::string& suite_dir,
             const std::string& model_path, bool oracle, const std::string& echo_list,
             const std::string& out_dir) {
    if (oracle == !model_path.empty())
        throw ConfigError("pass exactly one of --model or --oracle");
    const auto suite = load_suite(suite_dir);

    std::vector<double> echo_factors;
    if (!echo_list.empty()) {
        std::stringstream ss(echo_list);
        std::string item;
        while (std::getline(ss, item, ',')) echo_factors.push_back(std::stod(item));
        if (echo_factors.empty()) throw ConfigError("empty --echo list");
    } else {
        echo_factors.push_back(base_cfg.echo.factor);  // may be the scenario sentinel
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    json rows = json::array();
    std::string text;
    for (double factor : echo_factors) {
        EngineConfig cfg = base_cfg;
        cfg.echo.factor = factor;
        validate(cfg);
        const SimParams params = sim_params_from(cfg);

        std::string tdir_name = "transcripts";
        if (echo_factors.size() > 1) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "-echo-%g", factor);
            tdir_name += buf;
        }
        const fs::path tdir = fs::path(out_dir) / tdir_name;
        fs::create_directories(tdir, ec);
        if (ec) throw IoError("cannot create " + tdir.string() + ": " + ec.message());

        std::vector<Transcript> transcripts;
        transcripts.reserve(suite.scenarios.size());
        for (const auto& sc : suite.scenarios) {
            auto policy = make_policy(cfg, model_path, oracle, sc);
            auto t = run_conversation(sc, *policy, params);
            save_transcript(t, (tdir / (sc.id + ".jsonl")).string());
            transcripts.push_back(std::move(t));
        }
        auto report = evaluate_suite(suite.scenarios, transcripts, cfg.tolerances);
        report.suite_manifest_hash = suite.manifest_hash;
        rows.push_back(report_to_json(report));
        text += report_to_text(report) + "\n";
    }

    json out = rows.size() == 1 ? rows[0] : json{{"kind", "eval_report_sweep"}, {"rows", rows}};
    std::ofstream jf(fs::path(out_dir) / "report.json");
    if (!jf) throw IoError("cannot write report.json in " + out_dir);
    jf << out.dump(2) << '\n';
    std::ofstream tf(fs::path(out_dir) / "report.txt");
    tf << text;
    std::cout << text;
    return 0;
}

int cmd_latency_report(const EngineConfig& cfg, const std::string& suite_dir,
                       const std::string& transcripts_dir, const std::string& out_path) {
    const auto suite = load_suite(suite_dir);
    std::vector<TurnTakingJudgment> turns;
    std::vector<InterruptJudgment> interrupts;
    for (const auto& sc : suite.scenarios) {
        const auto path = fs::path(transcripts_dir) / (sc.id + ".jsonl");
        const auto t = load_transcript(path.string());
        bool has_turn_end = false;
        for (const auto& ev : sc.events) has_turn_end |= ev.label == EventLabel::TurnEnd;
        if (has_turn_end)
            turns.push_back(judge_turn_taking(sc, t, cfg.tolerances.turn_early_ms,
                                              cfg.tolerances.turn_late_ms));
        if (auto j = judge_interrupt(sc, t, cfg.tolerances.interrupt_window_ms))
            interrupts.push_back(*j);
    }
    const auto rep = latency_report(turns, interrupts);
    json j{{"schema_version", kSchemaVersion},
           {"kind", "latency_report"},
           {"convention", "p50 is the lower median"},
           {"turn_taking_ms",
            {{"count", rep.turn_taking.count},
             {"mean", rep.turn_taking.mean},
             {"p50", rep.turn_taking.p50},
             {"p95", rep.turn_taking.p95}}},
           {"interrupt_blocks",
            {{"count", rep.interrupt_blocks.count},
             {"mean", rep.interrupt_blocks.mean},
             {"p50", rep.interrupt_blocks.p50},
             {"p95", rep.interrupt_blocks.p95}}},
           {"excluded_turn_taking", rep.excluded_turn_taking},
           {"excluded_interrupt", rep.excluded_interrupt}};
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write " + out_path);
        out << j.dump(2) << '\n';
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_inspect(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read file: " + path);
    std::string first_line;
    std::getline(in, first_line);
    json header;
    try {
        header = json::parse(first_line);
    } catch (const json::parse_error&) {
        // maybe a multi-line JSON document
        in.clear();
        in.seekg(0);
        try {
            header = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": not valid JSON: " + e.what());
        }
    }
    check_schema_version(header, path);
    const std::string kind = header.value("kind", "unknown");
    std::cout << "file: " << path << "\nkind: " << kind << "\n";
    if (kind == "scenario") {
        const auto sc = load_scenario(path);
        std::cout << "id: " << sc.id << "\nseed: " << sc.seed << "\nevents: " << sc.events.size()
                  << "\nexpected transitions: " << sc.expected_transitions.size() << "\n";
        for (const auto& ev : sc.events)
            std::cout << "  " << to_string(ev.kind) << " @" << ev.start_ms << "ms +"
                      << ev.duration_ms << "ms label=" << to_string(ev.label)
                      << " relevance=" << ev.relevance << "\n";
    } else if (kind == "transcript") {
        const auto t = load_transcript(path);
        std::cout << "scenario: " << t.scenario_id << "\nstrategy: " << to_string(t.strategy)
                  << "\nblocks: " << t.records.size()
                  << "\nprotocol violations: " << t.protocol_violations << "\n";
        const auto transitions = realized_transitions(t);
        for (const auto& tr : transitions)
            std::cout << "  block " << tr.block << " -> " << to_string(tr.to) << "\n";
    } else if (kind == "policy") {
        const auto m = load_policy(path);
        std::cout << "strategy: " << to_string(m.strategy) << "\ninput_dim: " << m.input_dim
                  << "\nhidden_dim: " << m.hidden_dim << "\nparameters: " << m.parameter_count()
                  << "\n";
    } else if (kind == "suite_manifest" || kind == "eval_report" || kind == "latency_report" ||
               kind == "engine_config" || kind == "interleaved_sequence") {
        std::cout << header.dump(2) << "\n";
    } else {
        throw ConfigError(path + ": unrecognized artifact kind '" + kind + "'");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Console
// ---------------------------------------------------------------------------

struct ConsoleSession {
    Scenario scenario;
    std::mt19937_64 rng;

    explicit ConsoleSession(std::uint64_t seed) : rng(seed) {
        scenario.id = "console-session";
        scenario.seed = seed;
        scenario.suite_kind = "console";
        scenario.response_blocks = 8;
    }

    void add_utterance(std::int64_t start_block, int blocks, double relevance, EventKind kind,
                       EventLabel label, bool taper) {
        ScenarioEvent ev;
        ev.kind = kind;
        ev.start_ms = start_block * 80;
        ev.duration_ms = static_cast<std::int64_t>(blocks) * 80;
        ev.relevance = relevance;
        ev.label = label;
        std::uniform_real_distribution<double> act(0.85, 1.0);
        std::uniform_int_distribution<int> sym(1, 200);
        for (int i = 0; i < blocks; ++i) {
            ev.activity.push_back(kind == EventKind::Backchannel ? 0.55 : act(rng));
            ev.symbols.push_back(sym(rng));
        }
        if (taper && !ev.activity.empty()) ev.activity.back() = 0.38;
        scenario.events.push_back(std::move(ev));
    }
};

void print_block(const BlockRecord& rec, std::int64_t buffered_ms) {
    std::ostringstream os;
    os << "block " << rec.block << " [" << to_string(rec.state) << "] token=";
    os << to_string(rec.token.kind);
    if (rec.token.kind == TokenKind::Text) os << "(" << rec.token.symbol << ")";
    os << " buf=" << buffered_ms << "ms";
    for (const auto& ev : rec.events) os << " " << ev.type;
    if (rec.protocol_violation) os << " VIOLATION";
    std::cout << os.str() << "\n";
}

// Applies one console command; returns false on quit.
bool apply_console_command(const std::string& line, ConsoleSession& session,
                           ConversationEngine& engine, int& pending_steps) {
    std::istringstream is(line);
    std::string cmd;
    is >> cmd;
    if (cmd.empty()) return true;

    auto parse_opts = [&is](double& relevance, int& blocks) {
        std::string word;
        while (is >> word) {
            if (word == "--relevance")
                is >> relevance;
            else if (word == "--blocks")
                is >> blocks;
            else
                throw std::invalid_argument("unknown option: " + word);
        }
    };

    try {
        const std::int64_t next = engine.next_block();
        if (cmd == "quit" || cmd == "exit") return false;
        if (cmd == "step" || cmd == "s") {
            int n = 1;
            if (!(is >> n)) n = 1;
            pending_steps += std::max(1, n);
        } else if (cmd == "state") {
            std::cout << "state: " << to_string(engine.phase()) << ", buffer "
                      << engine.buffered_ms() << " ms, next block " << next << "\n";
        } else if (cmd == "say") {
            double rel = 0.8;
            int blocks = 10;
            parse_opts(rel, blocks);
            session.add_utterance(next, blocks, rel, EventKind::UserUtterance,
                                  EventLabel::TurnEnd, true);
            session.scenario.expected_transitions.push_back(
                {next + blocks - 1, StatePhase::Speaking});
            std::cout << "queued utterance: blocks " << next << ".." << next + blocks - 1 << "\n";
        } else if (cmd == "barge") {
            double rel = 0.9;
            int blocks = 8;
            parse_opts(rel, blocks);
            session.add_utterance(next, blocks, rel, EventKind::UserUtterance,
                                  EventLabel::TrueBargeIn, true);
            session.scenario.expected_transitions.push_back({next + 3, StatePhase::Listening});
            std::cout << "queued barge-in at block " << next << "\n";
        } else if (cmd == "backchannel") {
            double rel = 0.7;
            int blocks = 2;
            parse_opts(rel, blocks);
            session.add_utterance(next, std::min(blocks, 3), rel, EventKind::Backchannel,
                                  EventLabel::Backchannel, false);
            std::cout << "queued backchannel at block " << next << "\n";
        } else if (cmd == "third") {
            double rel = 0.2;
            int blocks = 8;
            parse_opts(rel, blocks);
            const bool interrupting = rel >= 0.7;
            session.add_utterance(next, blocks, rel, EventKind::ThirdPartyUtterance,
                                  interrupting ? EventLabel::TrueBargeIn
                                               : EventLabel::FalseBargeIn,
                                  true);
            if (interrupting)
                session.scenario.expected_transitions.push_back(
                    {next + 3, StatePhase::Listening});
            std::cout << "queued third-party speech at block " << next << "\n";
        } else if (cmd == "silence") {
            int n = 1;
            if (!(is >> n)) n = 1;
            pending_steps += std::max(1, n);
        } else if (cmd == "help") {
            std::cout << "commands: say|barge|backchannel|third [--relevance R] [--blocks N], "
                         "silence N, step [N], state, quit\n";
        } else {
            std::cout << "unknown command '" << cmd << "' (try help)\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cout << "usage error: " << e.what() << "\n";
    }
    return true;
}

int cmd_console(const EngineConfig& cfg, const std::string& model_path, bool oracle,
                bool no_realtime, const std::string& out_prefix) {
    ConsoleSession session(cfg.seed);
    SimParams params = sim_params_from(cfg);
    auto policy = make_policy(cfg, model_path, oracle, session.scenario);
    ConversationEngine engine(session.scenario, *policy, params);

    std::cout << "duplex console (" << (oracle ? "oracle" : "model") << ", "
              << to_string(cfg.strategy) << ", " << (no_realtime ? "stepped" : "real-time")
              << "). type 'help' for commands.\n";

    if (no_realtime) {
        std::string line;
        int pending = 0;
        while (true) {
            if (pending == 0) {
                std::cout << "> " << std::flush;
                if (!std::getline(std::cin, line)) break;
                if (!apply_console_command(line, session, engine, pending)) break;
            }
            while (pending > 0) {
                const auto& rec = engine.step();
                print_block(rec, engine.buffered_ms());
                --pending;
            }
        }
    } else {
        std::mutex mu;
        std::deque<std::string> queue;
        std::atomic<bool> done{false};
        std::thread reader([&] {
            std::string line;
            while (!done && std::getline(std::cin, line)) {
                std::lock_guard<std::mutex> lock(mu);
                queue.push_back(line);
                if (line == "quit" || line == "exit") break;
            }
            std::lock_guard<std::mutex> lock(mu);
            queue.push_back("quit");
        });
        int pending = 0;
        bool running = true;
        while (running) {
            {
                std::lock_guard<std::mutex> lock(mu);
                while (!queue.empty()) {
                    const std::string line = queue.front();
                    queue.pop_front();
                    if (!apply_console_command(line, session, engine, pending)) {
                        running = false;
                        break;
                    }
                }
            }
            if (!running) break;
            const auto& rec = engine.step();
            print_block(rec, engine.buffered_ms());
            std::this_thread::sleep_for(std::chrono::milliseconds(cfg.timing.block_ms));
        }
        done = true;
        reader.detach();
    }

    // run out the grace period so the saved scenario replays identically
    const std::int64_t horizon =
        (session.scenario.last_event_end_ms() + params.grace_ms + cfg.timing.block_ms - 1) /
        cfg.timing.block_ms;
    while (engine.next_block() < horizon) engine.step();

    save_scenario(session.scenario, out_prefix + ".scenario.json");
    save_transcript(engine.take_transcript(), out_prefix + ".transcript.jsonl");
    std::cout << "session saved to " << out_prefix << ".{scenario.json,transcript.jsonl}\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codec-free full-duplex dialogue engine over symbolic audio-proxy streams"};
    app.set_version_flag("--version", kEngineVersion);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "generate a scenario suite");
    std::string gen_kind;
    int gen_count = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("kind", gen_kind,
                    "turn-taking|barge-in-independent|barge-in-dependent|backchannel|mixed")
        ->required();
    gen->add_option("count", gen_count, "number of scenarios")->required()
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "suite seed")->required();
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train a policy (sft or dpo)");
    CommonOpts train_common;
    add_common(train, train_common);
    std::string train_mode, train_data, train_out, train_init, train_mon_ind, train_mon_dep,
        train_log;
    double train_bias = 0.0;
    std::optional<int> ovr_sft_steps, ovr_dpo_steps, ovr_dpo_batch, ovr_sft_batch;
    std::optional<double> ovr_sft_lr, ovr_dpo_lr, ovr_beta, ovr_lambda;
    train->add_option("--mode", train_mode, "sft|dpo")->required();
    train->add_option("--data", train_data, "training suite directory")->required();
    train->add_option("--out", train_out, "output model path")->required();
    train->add_option("--init", train_init, "initial model (dpo reference)");
    train->add_option("--monitor-independent", train_mon_ind, "monitor suite (independent)");
    train->add_option("--monitor-dependent", train_mon_dep, "monitor suite (dependent)");
    train->add_option("--bias-interrupt", train_bias,
                      "corrupt this fraction of negative probes toward stopping (sft)");
    train->add_option("--log", train_log, "JSONL metrics log path");
    train->add_option("--sft-steps", ovr_sft_steps, "override training.sft_steps");
    train->add_option("--sft-lr", ovr_sft_lr, "override training.sft_lr");
    train->add_option("--sft-batch", ovr_sft_batch, "override training.sft_batch");
    train->add_option("--dpo-steps", ovr_dpo_steps, "override training.dpo_steps");
    train->add_option("--dpo-lr", ovr_dpo_lr, "override training.dpo_lr");
    train->add_option("--dpo-batch", ovr_dpo_batch, "override training.dpo_batch");
    train->add_option("--beta", ovr_beta, "override training.dpo_beta");
    train->add_option("--lambda", ovr_lambda, "override training.dpo_lambda");

    // eval
    auto* eval = app.add_subcommand("eval", "run a suite and report duplex metrics");
    CommonOpts eval_common;
    add_common(eval, eval_common);
    std::string eval_suite, eval_model, eval_echo, eval_out;
    bool eval_oracle = false;
    eval->add_option("--suite", eval_suite, "suite directory")->required();
    eval->add_option("--model", eval_model, "policy model file");
    eval->add_flag("--oracle", eval_oracle, "use the ground-truth oracle policy");
    eval->add_option("--echo", eval_echo, "comma-separated echo factors to sweep");
    eval->add_option("--out", eval_out, "output directory")->required();

    // latency-report
    auto* lat = app.add_subcommand("latency-report", "latency statistics from transcripts");
    CommonOpts lat_common;
    add_common(lat, lat_common);
    std::string lat_suite, lat_transcripts, lat_out;
    lat->add_option("--suite", lat_suite, "suite directory")->required();
    lat->add_option("--transcripts", lat_transcripts, "transcripts directory")->required();
    lat->add_option("--out", lat_out, "JSON output path");

    // inspect
    auto* ins = app.add_subcommand("inspect", "summarize any engine artifact");
    std::string ins_file;
    ins->add_option("--file", ins_file, "artifact path")->required();

    // console
    auto* con = app.add_subcommand("console", "block-stepped interactive session");
    CommonOpts con_common;
    add_common(con, con_common);
    std::string con_model, con_out = "console-session";
    bool con_oracle = false, con_no_realtime = false;
    con->add_option("--model", con_model, "policy model file");
    con->add_flag("--oracle", con_oracle, "use the oracle policy");
    con->add_flag("--no-realtime", con_no_realtime, "advance only on step commands");
    con->add_option("--out", con_out, "session output prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_kind, gen_count, gen_seed, gen_out);
        if (train->parsed()) {
            EngineConfig cfg = resolve_config(train_common);
            if (ovr_sft_steps) cfg.training.sft_steps = *ovr_sft_steps;
            if (ovr_sft_lr) cfg.training.sft_lr = *ovr_sft_lr;
            if (ovr_sft_batch) cfg.training.sft_batch = *ovr_sft_batch;
            if (ovr_dpo_steps) cfg.training.dpo_steps = *ovr_dpo_steps;
            if (ovr_dpo_lr) cfg.training.dpo_lr = *ovr_dpo_lr;
            if (ovr_dpo_batch) cfg.training.dpo_batch = *ovr_dpo_batch;
            if (ovr_beta) cfg.training.dpo_beta = *ovr_beta;
            if (ovr_lambda) cfg.training.dpo_lambda = *ovr_lambda;
            validate(cfg);
            return cmd_train(cfg, train_mode, train_data, train_out, train_init, train_mon_ind,
                             train_mon_dep, train_bias, train_log);
        }
        if (eval->parsed())
            return cmd_eval(resolve_config(eval_common), eval_suite, eval_model, eval_oracle,
                            eval_echo, eval_out);
        if (lat->parsed())
            return cmd_latency_report(resolve_config(lat_common), lat_suite, lat_transcripts,
                                      lat_out);
        if (ins->parsed()) return cmd_inspect(ins_file);
        if (con->parsed())
            return cmd_console(resolve_config(con_common), con_model, con_oracle,
                               con_no_realtime, con_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
