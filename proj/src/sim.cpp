#include "duplex/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace duplex {

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::UserUtterance: return "user_utterance";
        case EventKind::ThirdPartyUtterance: return "third_party_utterance";
        case EventKind::Backchannel: return "backchannel";
        case EventKind::Silence: return "silence";
    }
    return "silence";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "user_utterance") return EventKind::UserUtterance;
    if (s == "third_party_utterance") return EventKind::ThirdPartyUtterance;
    if (s == "backchannel") return EventKind::Backchannel;
    if (s == "silence") return EventKind::Silence;
    throw std::invalid_argument("unknown event kind: " + s);
}

std::string to_string(EventLabel l) {
    switch (l) {
        case EventLabel::TrueBargeIn: return "true_barge_in";
        case EventLabel::FalseBargeIn: return "false_barge_in";
        case EventLabel::Backchannel: return "backchannel";
        case EventLabel::TurnEnd: return "turn_end";
        case EventLabel::None: return "none";
    }
    return "none";
}

EventLabel event_label_from_string(const std::string& s) {
    if (s == "true_barge_in") return EventLabel::TrueBargeIn;
    if (s == "false_barge_in") return EventLabel::FalseBargeIn;
    if (s == "backchannel") return EventLabel::Backchannel;
    if (s == "turn_end") return EventLabel::TurnEnd;
    if (s == "none") return EventLabel::None;
    throw std::invalid_argument("unknown event label: " + s);
}

std::string to_string(ProbeSetting s) {
    switch (s) {
        case ProbeSetting::None: return "none";
        case ProbeSetting::Independent: return "independent";
        case ProbeSetting::Dependent: return "dependent";
    }
    return "none";
}

ProbeSetting probe_setting_from_string(const std::string& s) {
    if (s == "none") return ProbeSetting::None;
    if (s == "independent") return ProbeSetting::Independent;
    if (s == "dependent") return ProbeSetting::Dependent;
    throw std::invalid_argument("unknown probe setting: " + s);
}

std::string to_string(SuiteKind k) {
    switch (k) {
        case SuiteKind::TurnTaking: return "turn-taking";
        case SuiteKind::BargeInIndependent: return "barge-in-independent";
        case SuiteKind::BargeInDependent: return "barge-in-dependent";
        case SuiteKind::Backchannel: return "backchannel";
        case SuiteKind::Mixed: return "mixed";
    }
    return "mixed";
}

SuiteKind suite_kind_from_string(const std::string& s) {
    if (s == "turn-taking") return SuiteKind::TurnTaking;
    if (s == "barge-in-independent") return SuiteKind::BargeInIndependent;
    if (s == "barge-in-dependent") return SuiteKind::BargeInDependent;
    if (s == "backchannel") return SuiteKind::Backchannel;
    if (s == "mixed") return SuiteKind::Mixed;
    throw std::invalid_argument("unknown suite kind: " + s);
}

std::int64_t Scenario::last_event_end_ms() const {
    std::int64_t end = 0;
    for (const auto& e : events) end = std::max(end, e.end_ms());
    return end;
}

// ---------------------------------------------------------------------------
// Suite generation
// ---------------------------------------------------------------------------

namespace {

constexpr int kBlockMs = 80;

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<int> random_symbols(std::mt19937_64& rng, int blocks) {
    std::vector<int> syms(static_cast<std::size_t>(blocks));
    for (auto& s : syms) s = uniform_int(rng, 1, 200);
    return syms;
}

// Full utterances taper in their final block: the endpointing cue.
std::vector<double> utterance_profile(std::mt19937_64& rng, int blocks) {
    std::vector<double> act(static_cast<std::size_t>(blocks));
    for (auto& a : act) a = uniform_real(rng, 0.85, 1.0);
    act.back() = uniform_real(rng, 0.30, 0.45);
    return act;
}

ScenarioEvent make_utterance(std::mt19937_64& rng, EventKind kind, int start_block, int blocks,
                             double relevance, EventLabel label) {
    ScenarioEvent ev;
    ev.kind = kind;
    ev.start_ms = static_cast<std::int64_t>(start_block) * kBlockMs;
    ev.duration_ms = static_cast<std::int64_t>(blocks) * kBlockMs;
    ev.relevance = relevance;
    ev.label = label;
    ev.activity = utterance_profile(rng, blocks);
    ev.symbols = random_symbols(rng, blocks);
    return ev;
}

ScenarioEvent make_backchannel(std::mt19937_64& rng, int start_block) {
    ScenarioEvent ev;
    ev.kind = EventKind::Backchannel;
    const int blocks = uniform_int(rng, 1, 3);
    ev.start_ms = static_cast<std::int64_t>(start_block) * kBlockMs;
    ev.duration_ms = static_cast<std::int64_t>(blocks) * kBlockMs;
    ev.relevance = uniform_real(rng, 0.4, 1.0);
    ev.label = EventLabel::Backchannel;
    ev.activity.assign(static_cast<std::size_t>(blocks), 0.0);
    for (auto& a : ev.activity) a = uniform_real(rng, 0.40, 0.70);
    ev.symbols = random_symbols(rng, blocks);
    return ev;
}

// Opening question shared by every scenario kind; returns the expected
// listening->speaking block (the question's final, tapered block).
int add_opening_question(Scenario& sc, std::mt19937_64& rng, int min_q = 8, int max_q = 16) {
    const int lead = uniform_int(rng, 2, 5);
    const int qdur = uniform_int(rng, min_q, max_q);
    sc.events.push_back(make_utterance(rng, EventKind::UserUtterance, lead, qdur,
                                       uniform_real(rng, 0.6, 1.0), EventLabel::TurnEnd));
    const int shift_block = lead + qdur - 1;
    sc.expected_transitions.push_back({shift_block, StatePhase::Speaking});
    return shift_block;
}

void add_probe(Scenario& sc, std::mt19937_64& rng, int shift_block, ProbeSetting setting,
               bool positive, bool silence_negative, bool third_party) {
    const int onset = shift_block + 2 + uniform_int(rng, 0, 6);
    sc.probe_setting = setting;
    if (positive) {
        const auto kind = third_party ? EventKind::ThirdPartyUtterance : EventKind::UserUtterance;
        sc.events.push_back(make_utterance(rng, kind, onset, uniform_int(rng, 6, 10),
                                           uniform_real(rng, 0.7, 1.0), EventLabel::TrueBargeIn));
        // stop once the probe is long enough to rule out a backchannel
        sc.expected_transitions.push_back({onset + 3, StatePhase::Listening});
    } else if (silence_negative) {
        ScenarioEvent ev;
        ev.kind = EventKind::Silence;
        ev.start_ms = static_cast<std::int64_t>(onset) * kBlockMs;
        ev.duration_ms = 6 * kBlockMs;
        ev.label = EventLabel::None;
        sc.events.push_back(ev);
    } else if (setting == ProbeSetting::Dependent) {
        sc.events.push_back(make_utterance(rng, EventKind::ThirdPartyUtterance, onset,
                                           uniform_int(rng, 6, 12), uniform_real(rng, 0.0, 0.3),
                                           EventLabel::FalseBargeIn));
    } else {
        sc.events.push_back(make_backchannel(rng, onset));
    }
    sc.probe_event = static_cast<int>(sc.events.size()) - 1;
}

Scenario make_turn_taking(std::mt19937_64& rng) {
    Scenario sc;
    sc.response_blocks = uniform_int(rng, 6, 12);
    add_opening_question(sc, rng, 8, 24);
    return sc;
}

Scenario make_barge_independent(std::mt19937_64& rng, bool positive, bool third_party) {
    Scenario sc;
    sc.response_blocks = uniform_int(rng, 10, 16);
    const int shift = add_opening_question(sc, rng);
    add_probe(sc, rng, shift, ProbeSetting::Independent, positive, false, third_party);
    return sc;
}

Scenario make_barge_dependent(std::mt19937_64& rng, bool positive, bool silence,
                              bool third_party) {
    Scenario sc;
    sc.response_blocks = uniform_int(rng, 10, 16);
    const int shift = add_opening_question(sc, rng);
    add_probe(sc, rng, shift, ProbeSetting::Dependent, positive, silence, third_party);
    return sc;
}

Scenario make_backchannel_scenario(std::mt19937_64& rng) {
    Scenario sc;
    sc.response_blocks = uniform_int(rng, 10, 16);
    const int shift = add_opening_question(sc, rng);
    add_probe(sc, rng, shift, ProbeSetting::Independent, false, false, false);
    return sc;
}

}  // namespace

std::vector<Scenario> generate_suite(SuiteKind kind, int count, std::uint64_t seed) {
    if (count <= 0) throw std::invalid_argument("suite count must be positive");
    std::mt19937_64 master(seed);
    std::vector<Scenario> suite;
    suite.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const std::uint64_t sseed = master();
        std::mt19937_64 rng(sseed);
        Scenario sc;
        switch (kind) {
            case SuiteKind::TurnTaking: sc = make_turn_taking(rng); break;
            case SuiteKind::BargeInIndependent:
                // even index: positive (user/third alternating); odd: backchannel
                sc = make_barge_independent(rng, i % 2 == 0, (i / 2) % 2 == 1);
                break;
            case SuiteKind::BargeInDependent:
                // even: positive (user/third alternating); odd: distractor/silence alternating
                sc = make_barge_dependent(rng, i % 2 == 0, i % 4 == 3, (i / 2) % 2 == 1);
                break;
            case SuiteKind::Backchannel: sc = make_backchannel_scenario(rng); break;
            case SuiteKind::Mixed: {
                switch (uniform_int(rng, 0, 3)) {
                    case 0: sc = make_turn_taking(rng); break;
                    case 1:
                        sc = make_barge_independent(rng, uniform_int(rng, 0, 1) == 0,
                                                    uniform_int(rng, 0, 1) == 0);
                        break;
                    case 2: {
                        const bool positive = uniform_int(rng, 0, 1) == 0;
                        const bool silence = !positive && uniform_int(rng, 0, 1) == 0;
                        sc = make_barge_dependent(rng, positive, silence,
                                                  uniform_int(rng, 0, 1) == 0);
                        break;
                    }
                    default: sc = make_backchannel_scenario(rng); break;
                }
                break;
            }
        }
        sc.seed = sseed;
        sc.suite_kind = to_string(kind);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "-%04d", i);
        sc.id = to_string(kind) + buf;
        suite.push_back(std::move(sc));
    }
    return suite;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

std::vector<Frame> echo_inject(std::span<const Frame> asst_playback, double factor) {
    if (factor < 0.0) throw std::invalid_argument("echo factor must be non-negative");
    std::vector<Frame> out;
    if (factor == 0.0) return out;
    out.reserve(asst_playback.size());
    for (const auto& f : asst_playback) {
        if (f.activity <= 0.0) {
            out.push_back(Frame{f.t_index, 0.0, Speaker::None, 0.0, 0.0});
            continue;
        }
        Frame e;
        e.t_index = f.t_index;
        e.activity = std::min(1.0, factor);
        e.speaker = Speaker::AssistantEcho;
        e.relevance = 0.0;
        e.energy = factor * f.energy;
        out.push_back(e);
    }
    return out;
}

OraclePolicy::OraclePolicy(const Scenario& scenario, StrategyKind strategy)
    : scenario_(&scenario), strategy_(strategy) {}

bool OraclePolicy::scripted_shift(std::int64_t block) const {
    for (const auto& t : scenario_->expected_transitions)
        if (t.block == block) return true;
    return false;
}

PolicyAction OraclePolicy::decide(std::span<const double>, const DecisionContext& ctx) {
    enum class Semantic { Hold, Transition, Text };
    Semantic s;
    if (ctx.phase == StatePhase::Listening) {
        s = scripted_shift(ctx.block_index) ? Semantic::Transition : Semantic::Hold;
    } else if (scripted_shift(ctx.block_index)) {
        s = Semantic::Transition;  // scripted barge-in stop
    } else if (!ctx.response_exhausted) {
        s = Semantic::Text;
    } else if (ctx.playing) {
        s = Semantic::Hold;  // waiting for playback to drain
    } else {
        s = Semantic::Transition;  // natural end of turn
    }

    switch (strategy_) {
        case StrategyKind::Implicit:
            if (s == Semantic::Text) return PolicyAction::EmitText;
            if (ctx.phase == StatePhase::Listening)
                return s == Semantic::Transition ? PolicyAction::EmitShift : PolicyAction::EmitHold;
            return s == Semantic::Transition ? PolicyAction::EmitHold : PolicyAction::EmitShift;
        case StrategyKind::ImplicitASR:
        case StrategyKind::ExplicitASR:
            if (s == Semantic::Transition) return PolicyAction::EmitShift;
            return PolicyAction::EmitText;  // ASR thinking stands in for holds
        case StrategyKind::Explicit:
        case StrategyKind::ExplicitNS:
            if (s == Semantic::Transition) return PolicyAction::EmitShift;
            return s == Semantic::Text ? PolicyAction::EmitText : PolicyAction::EmitHold;
    }
    return PolicyAction::EmitHold;
}

namespace {

int env_symbol_at(const Scenario& sc, std::int64_t block, int block_ms) {
    for (const auto& ev : sc.events) {
        if (ev.symbols.empty()) continue;
        const std::int64_t first = ev.start_ms / block_ms;
        const std::int64_t idx = block - first;
        if (idx >= 0 && idx < static_cast<std::int64_t>(ev.symbols.size()))
            return ev.symbols[static_cast<std::size_t>(idx)];
    }
    return 0;
}

std::vector<Frame> scenario_env_frames(const Scenario& sc, std::int64_t block,
                                       const TimingConfig& timing) {
    const int F = timing.frames_per_block();
    std::vector<Frame> frames(static_cast<std::size_t>(F));
    for (int i = 0; i < F; ++i) frames[static_cast<std::size_t>(i)].t_index = block * F + i;

    for (const auto& ev : sc.events) {
        if (ev.kind == EventKind::Silence || ev.activity.empty()) continue;
        const std::int64_t first = ev.start_ms / timing.block_ms;
        const std::int64_t idx = block - first;
        if (idx < 0 || idx >= static_cast<std::int64_t>(ev.activity.size())) continue;
        const double act = ev.activity[static_cast<std::size_t>(idx)];
        const Speaker spk =
            ev.kind == EventKind::ThirdPartyUtterance ? Speaker::ThirdParty : Speaker::User;
        for (auto& f : frames) {
            if (f.speaker != Speaker::None) continue;  // first event wins an occupied slot
            f.activity = act;
            f.speaker = spk;
            f.relevance = ev.relevance;
            f.energy = act;
        }
    }
    return frames;
}

}  // namespace

ConversationEngine::ConversationEngine(const Scenario& scenario, DecisionPolicy& policy,
                                       SimParams params)
    : scenario_(scenario),
      policy_(policy),
      params_(std::move(params)),
      history_(params_.history_blocks) {
    validate(params_.timing);
    echo_factor_ = params_.echo_factor.value_or(scenario_.echo_factor);
    if (echo_factor_ < 0.0) throw std::invalid_argument("echo factor must be non-negative");
    if (params_.echo_delay_blocks < 1)
        throw std::invalid_argument("echo delay must be at least one block");
    asr_strategy_ = params_.strategy == StrategyKind::ImplicitASR ||
                    params_.strategy == StrategyKind::ExplicitASR;

    transcript_.scenario_id = scenario_.id;
    transcript_.scenario_seed = scenario_.seed;
    transcript_.config_hash = params_.config_hash;
    transcript_.strategy = params_.strategy;
    transcript_.echo_factor = echo_factor_;
    transcript_.block_ms = params_.timing.block_ms;
    policy_.reset();
}

const BlockRecord& ConversationEngine::step() {
    const TimingConfig& timing = params_.timing;
    const int F = timing.frames_per_block();
    const std::int64_t k = next_block_++;

    BlockRecord rec;
    rec.block = k;
    rec.state = state_.phase;

    const std::int64_t buffered_before = playback_.buffered_ms;
    const bool playing_now = buffered_before > 0;
    if (playing_now && !was_playing_)
        rec.events.push_back({"speech_start", k * timing.block_ms, 0, 0, 0});

    // assistant stream: audible playback for this block
    rec.asst_frames.assign(static_cast<std::size_t>(F), Frame{});
    const int playing_slots =
        static_cast<int>(std::min<std::int64_t>(F, buffered_before / kFrameMs));
    for (int i = 0; i < F; ++i) {
        auto& f = rec.asst_frames[static_cast<std::size_t>(i)];
        f.t_index = k * F + i;
        if (i < playing_slots) {
            f.activity = 1.0;
            f.energy = 1.0;
        }
    }

    playback_ = advance_block(playback_, timing, false);
    if (playing_now && playback_.buffered_ms == 0)
        rec.events.push_back({"speech_end",
                              k * timing.block_ms +
                                  std::min<std::int64_t>(timing.block_ms, buffered_before),
                              0, 0, 0});

    // environment stream: scripted events plus delayed echo
    rec.env_frames = scenario_env_frames(scenario_, k, timing);
    const std::int64_t src = k - params_.echo_delay_blocks;
    if (echo_factor_ > 0.0 && src >= 0) {
        const auto echo = echo_inject(asst_history_[static_cast<std::size_t>(src)], echo_factor_);
        for (std::size_t i = 0; i < echo.size(); ++i) {
            auto& slot = rec.env_frames[i];
            if (slot.speaker == Speaker::None && echo[i].speaker != Speaker::None) {
                slot = echo[i];
                slot.t_index = k * F + static_cast<std::int64_t>(i);
            }
        }
    }

    rec.features = compute_block_features(rec.env_frames, playing_now, plan_.exhausted(),
                                          k - state_.since_block, params_.use_echo_feature);
    history_.push(rec.features);
    const auto x = history_.flat();

    DecisionContext ctx{k, state_.phase, plan_.exhausted(), playing_now};
    const PolicyAction action = policy_.decide(x, ctx);

    bool toggle = false;
    switch (action) {
        case PolicyAction::EmitHold:
            if (params_.strategy == StrategyKind::Implicit) {
                // Listen token: transition when currently speaking
                rec.token = Token::listen(k);
                toggle = state_.phase == StatePhase::Speaking;
            } else if (asr_strategy_) {
                rec.token = Token::text(0, k);  // blank ASR hold
            } else {
                rec.token = Token::think(k);
            }
            break;
        case PolicyAction::EmitShift:
            if (params_.strategy == StrategyKind::Implicit) {
                // Speak token: transition when currently listening
                rec.token = Token::speak(k);
                toggle = state_.phase == StatePhase::Listening;
            } else {
                rec.token = Token::shift(k);
                toggle = true;
            }
            break;
        case PolicyAction::EmitText: {
            if (state_.phase == StatePhase::Listening) {
                if (asr_strategy_) {
                    rec.token = Token::text(env_symbol_at(scenario_, k, timing.block_ms), k);
                } else {
                    rec.token = Token::text(0, k);
                    rec.protocol_violation = true;
                    ++transcript_.protocol_violations;
                }
                break;
            }
            if (plan_.exhausted() && asr_strategy_) {
                rec.token = Token::text(0, k);  // blank wait under ASR schemes
                break;
            }
            rec.token = Token::text(plan_.next_symbol, k);
            plan_.next_symbol += 1;
            plan_.emitted += 1;
            auto fed = feed_text_token(playback_, rec.token, timing);
            playback_ = fed.state;
            if (fed.chunk)
                rec.events.push_back({"speech_chunk", (k + 1) * timing.block_ms,
                                      fed.chunk->tokens, fed.chunk->duration_ms, 0});
            if (plan_.active && plan_.emitted >= plan_.total) {
                auto tail = flush_pending(playback_, timing);
                playback_ = tail.state;
                if (tail.chunk && tail.chunk->tokens > 0)
                    rec.events.push_back({"speech_chunk", (k + 1) * timing.block_ms,
                                          tail.chunk->tokens, tail.chunk->duration_ms, 0});
            }
            break;
        }
    }

    if (toggle) {
        if (state_.phase == StatePhase::Listening) {
            state_.toggle(k + 1);
            plan_ = ResponsePlan{true, scenario_.response_blocks, 0, 1};
        } else {
            if (playback_.buffered_ms > 0 || playback_.pending_text > 0) {
                rec.events.push_back({"speech_truncated", (k + 1) * timing.block_ms, 0, 0,
                                      playback_.buffered_ms});
                playback_ = flush_on_interrupt(playback_);
            }
            state_.toggle(k + 1);
            plan_ = ResponsePlan{};
        }
    }

    asst_history_.push_back(rec.asst_frames);
    was_playing_ = playing_now;
    transcript_.records.push_back(std::move(rec));
    return transcript_.records.back();
}

Transcript run_conversation(const Scenario& scenario, DecisionPolicy& policy,
                            const SimParams& params) {
    ConversationEngine engine(scenario, policy, params);
    const std::int64_t end_ms = scenario.last_event_end_ms() + params.grace_ms;
    const std::int64_t total_blocks =
        (end_ms + params.timing.block_ms - 1) / params.timing.block_ms;
    for (std::int64_t k = 0; k < total_blocks; ++k) engine.step();
    return engine.take_transcript();
}

std::vector<ExpectedTransition> realized_transitions(const Transcript& t) {
    std::vector<ExpectedTransition> out;
    for (const auto& rec : t.records) {
        const bool implicit = t.strategy == StrategyKind::Implicit;
        bool toggles = false;
        if (implicit) {
            toggles = (rec.state == StatePhase::Listening && rec.token.kind == TokenKind::Speak) ||
                      (rec.state == StatePhase::Speaking && rec.token.kind == TokenKind::Listen);
        } else {
            toggles = rec.token.kind == TokenKind::Shift;
        }
        if (toggles)
            out.push_back({rec.block, rec.state == StatePhase::Listening ? StatePhase::Speaking
                                                                         : StatePhase::Listening});
    }
    return out;
}

std::vector<BlockTruthRecord> derive_truth(const Scenario& scenario, const Transcript& t) {
    std::vector<BlockTruthRecord> truth;
    truth.reserve(t.records.size());
    const bool implicit = t.strategy == StrategyKind::Implicit;
    for (const auto& rec : t.records) {
        BlockTruthRecord r;
        r.env_symbol = env_symbol_at(scenario, rec.block, t.block_ms);
        if (rec.state == StatePhase::Listening) {
            const bool toggles = implicit ? rec.token.kind == TokenKind::Speak
                                          : rec.token.kind == TokenKind::Shift;
            r.phase = toggles ? BlockPhase::ShiftToSpeak : BlockPhase::Listen;
        } else {
            const bool toggles = implicit ? rec.token.kind == TokenKind::Listen
                                          : rec.token.kind == TokenKind::Shift;
            if (toggles) {
                r.phase = BlockPhase::ShiftToListen;
            } else if (rec.token.kind == TokenKind::Text && rec.token.symbol > 0) {
                r.phase = BlockPhase::SpeakText;
                r.response_symbol = rec.token.symbol;
            } else {
                r.phase = BlockPhase::SpeakWait;
            }
        }
        truth.push_back(r);
    }
    return truth;
}

namespace {

int gold_class(const Token& tok) {
    switch (tok.kind) {
        case TokenKind::Think:
        case TokenKind::Listen: return 0;
        case TokenKind::Shift:
        case TokenKind::Speak: return 1;
        case TokenKind::Text: return 2;
    }
    return 0;
}

}  // namespace

std::vector<TrainExample> build_training_data(const Scenario& scenario, const SimParams& params,
                                              const TrainingDataOptions& opts) {
    OraclePolicy oracle(scenario, params.strategy);
    const Transcript t = run_conversation(scenario, oracle, params);
    const auto truth = derive_truth(scenario, t);
    const auto labels = label_scheme(truth, params.strategy, opts.ns_weight);

    // Bias injection: teach the model to stop on high-relevance negative
    // probes (backchannels it should wave through), reproducing an SFT stage
    // that over-trusts relevance and under-uses duration. Low-relevance
    // distractors and silence stay clean so the bias is graded, not total.
    std::int64_t corrupt_block = -1;
    if (opts.bias_interrupt > 0.0 && scenario.probe_event >= 0) {
        const auto& probe = scenario.events[static_cast<std::size_t>(scenario.probe_event)];
        if (probe.label != EventLabel::TrueBargeIn && probe.relevance >= 0.7) {
            std::mt19937_64 rng(opts.bias_seed ^ scenario.seed);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < opts.bias_interrupt)
                corrupt_block = probe.start_ms / params.timing.block_ms + 3;
        }
    }

    FeatureHistory history(params.history_blocks);
    std::vector<TrainExample> out;
    out.reserve(t.records.size());
    for (std::size_t i = 0; i < t.records.size(); ++i) {
        history.push(t.records[i].features);
        TrainExample ex;
        ex.features = history.flat();
        ex.gold = gold_class(labels[i].token);
        ex.weight = labels[i].loss_weight;
        const bool transition_block = truth[i].phase == BlockPhase::ShiftToSpeak ||
                                      truth[i].phase == BlockPhase::ShiftToListen;
        if (transition_block) ex.weight *= opts.transition_upweight;
        if (t.records[i].block == corrupt_block &&
            t.records[i].state == StatePhase::Speaking) {
            ex.gold = 1;
            ex.weight = opts.transition_upweight;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<PreferencePair> build_preference_pairs(const Scenario& scenario,
                                                   const SimParams& params,
                                                   std::int64_t window_blocks) {
    std::vector<PreferencePair> pairs;
    if (scenario.probe_event < 0) return pairs;
    const auto& probe = scenario.events[static_cast<std::size_t>(scenario.probe_event)];
    const bool positive = probe.label == EventLabel::TrueBargeIn;
    const std::int64_t onset = probe.start_ms / params.timing.block_ms;

    // Positives prefer the stop at the protocol's decision block. Negatives
    // prefer continuing throughout the early window too, where a short
    // backchannel is not yet distinguishable from a real barge-in; those
    // ambiguous-prefix pairs carry the pressure that first makes the policy
    // overly cautious.
    std::vector<std::int64_t> offsets;
    if (positive) {
        offsets = {3};
    } else {
        offsets = {1, 2, 3};
    }

    OraclePolicy oracle(scenario, params.strategy);
    const Transcript t = run_conversation(scenario, oracle, params);
    FeatureHistory history(params.history_blocks);
    const int continue_class = 2;  // keep responding
    for (const auto& rec : t.records) {
        history.push(rec.features);
        const std::int64_t offset = rec.block - onset;
        if (offset < 0 || offset >= window_blocks) continue;
        bool wanted = false;
        for (auto o : offsets) wanted |= o == offset;
        if (!wanted) continue;
        if (rec.state != StatePhase::Speaking) continue;  // probe landed outside speech
        PreferencePair p;
        p.context = history.flat();
        if (positive) {
            p.chosen = 1;
            p.rejected = continue_class;
        } else {
            p.chosen = continue_class;
            p.rejected = 1;
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace duplex
