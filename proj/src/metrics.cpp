#include "duplex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "duplex/serde.hpp"
#include "duplex/version.hpp"

namespace duplex {

TurnTakingJudgment judge_turn_taking(const Scenario& scenario, const Transcript& t,
                                     std::int64_t early_tol_ms, std::int64_t late_tol_ms) {
    const ScenarioEvent* turn_end = nullptr;
    for (const auto& ev : scenario.events) {
        if (ev.label != EventLabel::TurnEnd) continue;
        if (turn_end)
            throw std::invalid_argument("scenario " + scenario.id +
                                        " carries more than one TurnEnd label");
        turn_end = &ev;
    }
    if (!turn_end)
        throw std::invalid_argument("scenario " + scenario.id + " has no TurnEnd label");

    TurnTakingJudgment j;
    j.scenario_id = scenario.id;
    j.utterance_end_ms = turn_end->end_ms();
    for (const auto& rec : t.records) {
        for (const auto& ev : rec.events) {
            if (ev.type == "speech_start") {
                j.speak_onset_ms = ev.t_ms;
                break;
            }
        }
        if (j.speak_onset_ms) break;
    }
    if (j.speak_onset_ms) {
        j.latency_ms = *j.speak_onset_ms - j.utterance_end_ms;
        j.success = *j.speak_onset_ms > j.utterance_end_ms - early_tol_ms &&
                    *j.speak_onset_ms <= j.utterance_end_ms + late_tol_ms;
    }
    return j;
}

std::optional<InterruptJudgment> judge_interrupt(const Scenario& scenario, const Transcript& t,
                                                 std::int64_t window_ms) {
    if (scenario.probe_event < 0) return std::nullopt;
    const auto& probe = scenario.events[static_cast<std::size_t>(scenario.probe_event)];

    InterruptJudgment j;
    j.scenario_id = scenario.id;
    j.setting = scenario.probe_setting;
    j.positive = probe.label == EventLabel::TrueBargeIn;

    const std::int64_t onset_block = probe.start_ms / t.block_ms;
    const std::int64_t window_blocks = window_ms / t.block_ms;
    for (const auto& tr : realized_transitions(t)) {
        if (tr.to != StatePhase::Listening) continue;
        if (tr.block >= onset_block && tr.block < onset_block + window_blocks) {
            j.stopped = true;
            j.decision_latency_blocks = tr.block - onset_block + 1;
            break;
        }
    }
    return j;
}

double turn_taking_success(std::span<const TurnTakingJudgment> judgments) {
    if (judgments.empty()) throw std::invalid_argument("no turn-taking judgments");
    std::size_t ok = 0;
    for (const auto& j : judgments)
        if (j.success) ++ok;
    return static_cast<double>(ok) / static_cast<double>(judgments.size());
}

ConfusionCounts count_judgments(std::span<const InterruptJudgment> judgments) {
    ConfusionCounts c;
    for (const auto& j : judgments) {
        if (j.positive)
            (j.stopped ? c.tp : c.fn)++;
        else
            (j.stopped ? c.fp : c.tn)++;
    }
    return c;
}

Prf prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    if (tp + fn == 0)
        throw std::invalid_argument("recall undefined: no positive examples (tp+fn == 0)");
    if (tp + fp == 0)
        throw std::invalid_argument("precision undefined: no predicted positives (tp+fp == 0)");
    Prf p;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    p.f1 = (p.precision + p.recall) > 0.0
               ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
               : 0.0;
    return p;
}

Prf interruption_prf(std::span<const InterruptJudgment> judgments) {
    const auto c = count_judgments(judgments);
    return prf_from_counts(c.tp, c.fp, c.fn);
}

double overall_f1(double f1_independent, double f1_dependent) {
    if (f1_independent < 0.0 || f1_independent > 1.0 || f1_dependent < 0.0 ||
        f1_dependent > 1.0)
        throw std::invalid_argument("F1 scores must lie in [0,1]");
    return 0.5 * (f1_independent + f1_dependent);
}

LatencySummary summarize_latencies(std::vector<std::int64_t> values) {
    LatencySummary s;
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (auto v : values) sum += static_cast<double>(v);
    s.mean = sum / static_cast<double>(values.size());
    s.p50 = values[(values.size() - 1) / 2];  // lower median
    const auto n = values.size();
    const auto i95 = static_cast<std::size_t>(
        std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(0.95 * static_cast<double>(n))) - 1));
    s.p95 = values[std::min(i95, n - 1)];
    return s;
}

LatencyReport latency_report(std::span<const TurnTakingJudgment> turns,
                             std::span<const InterruptJudgment> interrupts) {
    LatencyReport r;
    std::vector<std::int64_t> turn_latencies;
    for (const auto& j : turns) {
        if (j.success && j.latency_ms)
            turn_latencies.push_back(*j.latency_ms);
        else
            ++r.excluded_turn_taking;
    }
    std::vector<std::int64_t> stop_latencies;
    for (const auto& j : interrupts) {
        if (j.positive && j.stopped && j.decision_latency_blocks)
            stop_latencies.push_back(*j.decision_latency_blocks);
        else
            ++r.excluded_interrupt;
    }
    r.turn_taking = summarize_latencies(std::move(turn_latencies));
    r.interrupt_blocks = summarize_latencies(std::move(stop_latencies));
    return r;
}

namespace {

SettingReport setting_report(std::span<const InterruptJudgment> judgments) {
    SettingReport r;
    r.judged = judgments.size();
    r.counts = count_judgments(judgments);
    if (judgments.empty()) {
        r.undefined_reason = "no judgments";
        return r;
    }
    try {
        r.prf = prf_from_counts(r.counts.tp, r.counts.fp, r.counts.fn);
    } catch (const std::invalid_argument& e) {
        r.undefined_reason = e.what();
    }
    return r;
}

}  // namespace

EvalReport evaluate_suite(std::span<const Scenario> scenarios,
                          std::span<const Transcript> transcripts, const EvalTolerances& tol) {
    if (scenarios.size() != transcripts.size())
        throw std::invalid_argument("scenario/transcript count mismatch");
    std::map<std::string, const Transcript*> by_id;
    for (const auto& t : transcripts) by_id[t.scenario_id] = &t;

    EvalReport r;
    r.tolerances = tol;
    r.engine_version = kEngineVersion;
    r.conversations = scenarios.size();

    std::vector<TurnTakingJudgment> turns;
    std::vector<InterruptJudgment> independent, dependent;
    for (const auto& sc : scenarios) {
        const auto it = by_id.find(sc.id);
        if (it == by_id.end())
            throw std::invalid_argument("no transcript for scenario " + sc.id);
        const Transcript& t = *it->second;
        r.protocol_violations += t.protocol_violations;
        if (!r.config_hash.empty() && r.config_hash != t.config_hash)
            throw std::invalid_argument("transcripts stem from differing configs");
        r.config_hash = t.config_hash;
        r.echo_factor = t.echo_factor;

        bool has_turn_end = false;
        for (const auto& ev : sc.events) has_turn_end |= ev.label == EventLabel::TurnEnd;
        if (has_turn_end)
            turns.push_back(judge_turn_taking(sc, t, tol.turn_early_ms, tol.turn_late_ms));
        if (auto ij = judge_interrupt(sc, t, tol.interrupt_window_ms)) {
            if (ij->setting == ProbeSetting::Dependent)
                dependent.push_back(*ij);
            else
                independent.push_back(*ij);
        }
    }

    r.turn_taking_judged = turns.size();
    r.turn_taking_rate = turns.empty() ? 0.0 : turn_taking_success(turns);
    r.independent = setting_report(independent);
    r.dependent = setting_report(dependent);
    if (r.independent.prf && r.dependent.prf)
        r.overall = overall_f1(r.independent.prf->f1, r.dependent.prf->f1);
    std::vector<InterruptJudgment> all_interrupts = independent;
    all_interrupts.insert(all_interrupts.end(), dependent.begin(), dependent.end());
    r.latency = latency_report(turns, all_interrupts);
    return r;
}

namespace {

json setting_to_json(const SettingReport& s) {
    json j{{"judged", s.judged},
           {"tp", s.counts.tp},
           {"fp", s.counts.fp},
           {"fn", s.counts.fn},
           {"tn", s.counts.tn}};
    if (s.prf) {
        j["precision"] = s.prf->precision;
        j["recall"] = s.prf->recall;
        j["f1"] = s.prf->f1;
    } else {
        j["precision"] = nullptr;
        j["recall"] = nullptr;
        j["f1"] = nullptr;
        j["undefined_reason"] = s.undefined_reason;
    }
    return j;
}

json latency_to_json(const LatencySummary& s) {
    if (s.count == 0) return json{{"count", 0}};
    return json{{"count", s.count}, {"mean", s.mean}, {"p50", s.p50}, {"p95", s.p95}};
}

}  // namespace

json report_to_json(const EvalReport& r) {
    return json{
        {"schema_version", kSchemaVersion},
        {"kind", "eval_report"},
        {"engine_version", r.engine_version},
        {"config_hash", r.config_hash},
        {"suite_manifest_hash", r.suite_manifest_hash},
        {"echo_factor", r.echo_factor},
        {"tolerances",
         {{"turn_early_ms", r.tolerances.turn_early_ms},
          {"turn_late_ms", r.tolerances.turn_late_ms},
          {"interrupt_window_ms", r.tolerances.interrupt_window_ms}}},
        {"conversations", r.conversations},
        {"protocol_violations", r.protocol_violations},
        {"turn_taking", {{"judged", r.turn_taking_judged}, {"success_rate", r.turn_taking_rate}}},
        {"independent", setting_to_json(r.independent)},
        {"dependent", setting_to_json(r.dependent)},
        {"overall_f1", r.overall ? json(*r.overall) : json(nullptr)},
        {"latency",
         {{"convention", "p50 is the lower median"},
          {"turn_taking_ms", latency_to_json(r.latency.turn_taking)},
          {"interrupt_blocks", latency_to_json(r.latency.interrupt_blocks)},
          {"excluded_turn_taking", r.latency.excluded_turn_taking},
          {"excluded_interrupt", r.latency.excluded_interrupt}}}};
}

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string setting_line(const std::string& name, const SettingReport& s) {
    std::ostringstream os;
    os << "  " << name;
    for (std::size_t i = name.size(); i < 14; ++i) os << ' ';
    if (s.prf) {
        os << fmt3(s.prf->precision) << "      " << fmt3(s.prf->recall) << "   " << fmt3(s.prf->f1);
    } else {
        os << "undefined (" << s.undefined_reason << ")";
    }
    os << "   [" << s.judged << " judged]";
    return os.str();
}

}  // namespace

std::string report_to_text(const EvalReport& r) {
    std::ostringstream os;
    os << "eval report (engine " << r.engine_version << ")\n";
    os << "  config hash    " << r.config_hash << "\n";
    os << "  suite hash     " << r.suite_manifest_hash << "\n";
    os << "  echo factor    " << r.echo_factor << "\n";
    os << "  tolerances     early " << r.tolerances.turn_early_ms << " ms, late "
       << r.tolerances.turn_late_ms << " ms, interrupt window "
       << r.tolerances.interrupt_window_ms << " ms\n";
    os << "  conversations  " << r.conversations << " (protocol violations "
       << r.protocol_violations << ")\n";
    os << "  turn-taking    " << fmt3(r.turn_taking_rate) << " over " << r.turn_taking_judged
       << " conversations\n";
    os << "                precision  recall  f1\n";
    os << setting_line("independent", r.independent) << "\n";
    os << setting_line("dependent", r.dependent) << "\n";
    os << "  overall f1     " << (r.overall ? fmt3(*r.overall) : std::string("undefined")) << "\n";
    os << "  latency        p50 convention: lower median\n";
    if (r.latency.turn_taking.count > 0)
        os << "    turn-taking  mean " << fmt3(r.latency.turn_taking.mean) << " ms, p50 "
           << r.latency.turn_taking.p50 << " ms, p95 " << r.latency.turn_taking.p95 << " ms over "
           << r.latency.turn_taking.count << "\n";
    else
        os << "    turn-taking  no successful conversations\n";
    if (r.latency.interrupt_blocks.count > 0)
        os << "    interrupt    mean " << fmt3(r.latency.interrupt_blocks.mean) << " blocks, p50 "
           << r.latency.interrupt_blocks.p50 << ", p95 " << r.latency.interrupt_blocks.p95
           << " over " << r.latency.interrupt_blocks.count << "\n";
    else
        os << "    interrupt    no stopped positives\n";
    return os.str();
}

}  // namespace duplex
