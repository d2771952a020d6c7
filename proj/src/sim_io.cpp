#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include "duplex/serde.hpp"
#include "duplex/sim.hpp"

namespace duplex {

namespace {

json event_to_json(const ScenarioEvent& ev) {
    json j{{"kind", to_string(ev.kind)},
           {"start_ms", ev.start_ms},
           {"duration_ms", ev.duration_ms},
           {"relevance", ev.relevance},
           {"label", to_string(ev.label)}};
    if (!ev.activity.empty()) j["activity"] = ev.activity;
    if (!ev.symbols.empty()) j["symbols"] = ev.symbols;
    return j;
}

ScenarioEvent event_from_json(const json& j) {
    reject_unknown_keys(
        j, {"kind", "start_ms", "duration_ms", "relevance", "label", "activity", "symbols"},
        "scenario event");
    ScenarioEvent ev;
    ev.kind = event_kind_from_string(j.at("kind").get<std::string>());
    ev.start_ms = j.at("start_ms").get<std::int64_t>();
    ev.duration_ms = j.at("duration_ms").get<std::int64_t>();
    ev.relevance = j.at("relevance").get<double>();
    ev.label = event_label_from_string(j.at("label").get<std::string>());
    if (j.contains("activity")) ev.activity = j.at("activity").get<std::vector<double>>();
    if (j.contains("symbols")) ev.symbols = j.at("symbols").get<std::vector<int>>();
    return ev;
}

json features_to_json(const BlockFeatures& f) {
    const auto a = f.to_array();
    return json(std::vector<double>(a.begin(), a.end()));
}

BlockFeatures features_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != BlockFeatures::kDim)
        throw ConfigError("block feature vector must have " +
                          std::to_string(BlockFeatures::kDim) + " entries");
    BlockFeatures f;
    f.env_activity = v[0];
    f.spk_user = v[1];
    f.spk_third = v[2];
    f.spk_none = v[3];
    f.relevance = v[4];
    f.echo_energy = v[5];
    f.asst_playing = v[6];
    f.text_done = v[7];
    f.since_transition = v[8];
    return f;
}

}  // namespace

json scenario_to_json(const Scenario& s) {
    json transitions = json::array();
    for (const auto& tr : s.expected_transitions)
        transitions.push_back(json{{"block", tr.block}, {"to", to_string(tr.to)}});
    json events = json::array();
    for (const auto& ev : s.events) events.push_back(event_to_json(ev));
    return json{{"schema_version", kSchemaVersion},
                {"kind", "scenario"},
                {"id", s.id},
                {"seed", s.seed},
                {"suite_kind", s.suite_kind},
                {"echo_factor", s.echo_factor},
                {"response_blocks", s.response_blocks},
                {"probe_event", s.probe_event},
                {"probe_setting", to_string(s.probe_setting)},
                {"expected_transitions", transitions},
                {"events", events}};
}

Scenario scenario_from_json(const json& j) {
    check_schema_version(j, "scenario");
    if (j.value("kind", "") != "scenario") throw ConfigError("not a scenario file");
    reject_unknown_keys(j,
                        {"schema_version", "kind", "id", "seed", "suite_kind", "echo_factor",
                         "response_blocks", "probe_event", "probe_setting",
                         "expected_transitions", "events"},
                        "scenario");
    Scenario s;
    s.id = j.at("id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.suite_kind = j.at("suite_kind").get<std::string>();
    s.echo_factor = j.at("echo_factor").get<double>();
    s.response_blocks = j.at("response_blocks").get<int>();
    s.probe_event = j.at("probe_event").get<int>();
    s.probe_setting = probe_setting_from_string(j.at("probe_setting").get<std::string>());
    for (const auto& tr : j.at("expected_transitions")) {
        reject_unknown_keys(tr, {"block", "to"}, "expected transition");
        s.expected_transitions.push_back(
            {tr.at("block").get<std::int64_t>(), phase_from_string(tr.at("to").get<std::string>())});
    }
    for (const auto& ev : j.at("events")) s.events.push_back(event_from_json(ev));
    return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scenario file: " + path);
    out << scenario_to_json(s).dump(2) << '\n';
    if (!out) throw IoError("failed writing scenario file: " + path);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_transcript_jsonl(std::ostream& out, const Transcript& t) {
    json header{{"schema_version", kSchemaVersion},
                {"kind", "transcript"},
                {"scenario_id", t.scenario_id},
                {"scenario_seed", t.scenario_seed},
                {"config_hash", t.config_hash},
                {"strategy", to_string(t.strategy)},
                {"echo_factor", t.echo_factor},
                {"block_ms", t.block_ms},
                {"records", t.records.size()},
                {"protocol_violations", t.protocol_violations}};
    out << header.dump() << '\n';
    for (const auto& rec : t.records) {
        json events = json::array();
        for (const auto& ev : rec.events) {
            json e{{"type", ev.type}, {"t_ms", ev.t_ms}};
            if (ev.tokens != 0) e["tokens"] = ev.tokens;
            if (ev.duration_ms != 0) e["duration_ms"] = ev.duration_ms;
            if (ev.dropped_ms != 0) e["dropped_ms"] = ev.dropped_ms;
            events.push_back(e);
        }
        json rj{{"block", rec.block},
                {"state", to_string(rec.state)},
                {"token", rec.token},
                {"features", features_to_json(rec.features)},
                {"events", events},
                {"env", rec.env_frames},
                {"asst", rec.asst_frames}};
        if (rec.protocol_violation) rj["protocol_violation"] = true;
        out << rj.dump() << '\n';
    }
}

Transcript read_transcript_jsonl(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("transcript stream is empty");
    json header = json::parse(line);
    check_schema_version(header, "transcript");
    if (header.value("kind", "") != "transcript") throw ConfigError("not a transcript file");

    Transcript t;
    t.scenario_id = header.at("scenario_id").get<std::string>();
    t.scenario_seed = header.at("scenario_seed").get<std::uint64_t>();
    t.config_hash = header.at("config_hash").get<std::string>();
    t.strategy = strategy_from_string(header.at("strategy").get<std::string>());
    t.echo_factor = header.at("echo_factor").get<double>();
    t.block_ms = header.at("block_ms").get<int>();
    t.protocol_violations = header.at("protocol_violations").get<int>();

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rj = json::parse(line);
        BlockRecord rec;
        rec.block = rj.at("block").get<std::int64_t>();
        rec.state = phase_from_string(rj.at("state").get<std::string>());
        rec.token = rj.at("token").get<Token>();
        rec.token.block_index = rec.block;
        rec.protocol_violation = rj.value("protocol_violation", false);
        rec.features = features_from_json(rj.at("features"));
        for (const auto& e : rj.at("events")) {
            PlaybackEventRecord ev;
            ev.type = e.at("type").get<std::string>();
            ev.t_ms = e.at("t_ms").get<std::int64_t>();
            ev.tokens = e.value("tokens", 0);
            ev.duration_ms = e.value("duration_ms", std::int64_t{0});
            ev.dropped_ms = e.value("dropped_ms", std::int64_t{0});
            rec.events.push_back(std::move(ev));
        }
        rec.env_frames = rj.at("env").get<std::vector<Frame>>();
        rec.asst_frames = rj.at("asst").get<std::vector<Frame>>();
        t.records.push_back(std::move(rec));
    }
    if (t.records.size() != header.at("records").get<std::size_t>())
        throw IoError("transcript record count disagrees with header");
    return t;
}

void save_transcript(const Transcript& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write transcript file: " + path);
    write_transcript_jsonl(out, t);
    if (!out) throw IoError("failed writing transcript file: " + path);
}

json suite_label_counts(const std::vector<Scenario>& suite) {
    std::map<std::string, int> labels;
    std::map<std::string, int> settings;
    for (const auto& sc : suite) {
        settings[to_string(sc.probe_setting)]++;
        if (sc.probe_event >= 0)
            labels[to_string(sc.events[static_cast<std::size_t>(sc.probe_event)].label)]++;
        for (const auto& ev : sc.events)
            if (ev.label == EventLabel::TurnEnd) labels["turn_end"]++;
    }
    return json{{"probe_labels", labels}, {"probe_settings", settings}};
}

json save_suite(const std::vector<Scenario>& suite, SuiteKind kind, std::uint64_t seed,
                const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "scenarios", ec);
    if (ec) throw IoError("cannot create suite directory " + dir + ": " + ec.message());

    json files = json::array();
    for (const auto& sc : suite) {
        const std::string rel = "scenarios/" + sc.id + ".json";
        save_scenario(sc, (fs::path(dir) / rel).string());
        files.push_back(json{{"id", sc.id}, {"seed", sc.seed}, {"file", rel}});
    }
    json manifest{{"schema_version", kSchemaVersion},
                  {"kind", "suite_manifest"},
                  {"suite_kind", to_string(kind)},
                  {"count", suite.size()},
                  {"seed", seed},
                  {"label_counts", suite_label_counts(suite)},
                  {"scenarios", files}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw IoError("cannot write suite manifest in " + dir);
    out << manifest.dump(2) << '\n';
    return manifest;
}

LoadedSuite load_suite(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot read suite manifest: " + manifest_path.string());
    LoadedSuite suite;
    try {
        suite.manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(manifest_path.string() + ": invalid JSON: " + e.what());
    }
    check_schema_version(suite.manifest, "suite_manifest");
    if (suite.manifest.value("kind", "") != "suite_manifest")
        throw ConfigError(manifest_path.string() + ": not a suite manifest");
    suite.manifest_hash = fnv1a64_hex(suite.manifest.dump());
    for (const auto& entry : suite.manifest.at("scenarios")) {
        const auto rel = entry.at("file").get<std::string>();
        suite.scenarios.push_back(load_scenario((fs::path(dir) / rel).string()));
    }
    return suite;
}

Transcript load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read transcript file: " + path);
    return read_transcript_jsonl(in);
}

}  // namespace duplex
