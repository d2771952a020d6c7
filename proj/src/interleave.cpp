#include "duplex/interleave.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "duplex/serde.hpp"

namespace duplex {

std::string to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::Implicit: return "implicit";
        case StrategyKind::Explicit: return "explicit";
        case StrategyKind::ImplicitASR: return "implicit_asr";
        case StrategyKind::ExplicitASR: return "explicit_asr";
        case StrategyKind::ExplicitNS: return "explicit_ns";
    }
    return "explicit";
}

StrategyKind strategy_from_string(const std::string& s) {
    if (s == "implicit") return StrategyKind::Implicit;
    if (s == "explicit") return StrategyKind::Explicit;
    if (s == "implicit_asr") return StrategyKind::ImplicitASR;
    if (s == "explicit_asr") return StrategyKind::ExplicitASR;
    if (s == "explicit_ns") return StrategyKind::ExplicitNS;
    throw std::invalid_argument("unknown strategy: " + s);
}

bool feeds_back_all_tokens(StrategyKind s) {
    return s == StrategyKind::Explicit || s == StrategyKind::ExplicitASR ||
           s == StrategyKind::ExplicitNS;
}

std::string to_string(SlotKind k) {
    switch (k) {
        case SlotKind::EnvEmbedding: return "env_embedding";
        case SlotKind::AsstEmbedding: return "asst_embedding";
        case SlotKind::TokenInput: return "token_input";
        case SlotKind::TokenLabel: return "token_label";
    }
    return "token_label";
}

namespace {

SlotKind slot_kind_from_string(const std::string& s) {
    if (s == "env_embedding") return SlotKind::EnvEmbedding;
    if (s == "asst_embedding") return SlotKind::AsstEmbedding;
    if (s == "token_input") return SlotKind::TokenInput;
    if (s == "token_label") return SlotKind::TokenLabel;
    throw std::invalid_argument("unknown slot kind: " + s);
}

bool kind_allowed(TokenKind k, StrategyKind strategy) {
    switch (strategy) {
        case StrategyKind::Implicit:
            return k == TokenKind::Listen || k == TokenKind::Speak || k == TokenKind::Text;
        case StrategyKind::Explicit:
            return k == TokenKind::Think || k == TokenKind::Shift || k == TokenKind::Text;
        case StrategyKind::ImplicitASR:
        case StrategyKind::ExplicitASR:
        case StrategyKind::ExplicitNS:
            return k == TokenKind::Shift || k == TokenKind::Text;
    }
    return false;
}

// Speaking/Listening state of each labeled block, derived from the labels
// themselves. Needed to tell response text from ASR "thinking" text.
std::vector<StatePhase> label_states(std::span<const LabeledToken> labels,
                                     StrategyKind strategy) {
    std::vector<StatePhase> states(labels.size(), StatePhase::Listening);
    if (strategy == StrategyKind::Implicit) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const TokenKind k = labels[i].token.kind;
            states[i] = (k == TokenKind::Speak || k == TokenKind::Text) ? StatePhase::Speaking
                                                                        : StatePhase::Listening;
        }
        return states;
    }
    // Shift-marked strategies: a Shift label toggles the state of the blocks
    // after it (ExplicitNS: only positively weighted Shifts are transitions).
    StatePhase phase = StatePhase::Listening;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        states[i] = phase;
        const auto& lt = labels[i];
        const bool transition = lt.token.kind == TokenKind::Shift &&
                                (strategy != StrategyKind::ExplicitNS || lt.loss_weight > 0.0);
        if (transition)
            phase = phase == StatePhase::Listening ? StatePhase::Speaking : StatePhase::Listening;
    }
    return states;
}

// The token the model would actually feed back at inference time. Identical
// to the label everywhere except under ExplicitNS, whose labels are
// counterfactual Shifts.
Token realized_token(const LabeledToken& lt, StrategyKind strategy) {
    if (strategy != StrategyKind::ExplicitNS) return lt.token;
    if (lt.token.kind == TokenKind::Text) return lt.token;
    if (lt.token.kind == TokenKind::Shift && lt.loss_weight > 0.0) return lt.token;
    return Token::think(lt.token.block_index);
}

// Which blocks carry a TokenInput, and with what value. Position 0 never has
// one: there is no previous block.
std::vector<std::optional<Token>> input_stream(std::span<const LabeledToken> labels,
                                               StrategyKind strategy) {
    std::vector<std::optional<Token>> inputs(labels.size());
    if (labels.empty()) return inputs;
    const auto states = label_states(labels, strategy);
    for (std::size_t k = 1; k < labels.size(); ++k) {
        const auto& prev = labels[k - 1];
        if (feeds_back_all_tokens(strategy)) {
            inputs[k] = realized_token(prev, strategy);
        } else if (prev.token.kind == TokenKind::Text && states[k - 1] == StatePhase::Speaking) {
            inputs[k] = prev.token;
        }
    }
    return inputs;
}

}  // namespace

void validate_labels(std::span<const LabeledToken> labels, StrategyKind strategy) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& lt = labels[i];
        if (!kind_allowed(lt.token.kind, strategy))
            throw std::invalid_argument("label " + std::to_string(i) + ": token '" +
                                        to_string(lt.token.kind) + "' is not valid under the " +
                                        to_string(strategy) + " strategy");
        if (strategy == StrategyKind::ExplicitNS) {
            if (lt.loss_weight == 0.0)
                throw std::invalid_argument("label " + std::to_string(i) +
                                            ": ExplicitNS weights must be nonzero");
            if (lt.token.kind == TokenKind::Text && lt.loss_weight < 0.0)
                throw std::invalid_argument("label " + std::to_string(i) +
                                            ": text labels cannot carry negative weight");
        } else if (lt.loss_weight < 0.0) {
            throw std::invalid_argument("label " + std::to_string(i) +
                                        ": negative weights are ExplicitNS-only");
        }
    }
}

std::vector<BlockEmbeddings> embed_blocks(std::span<const TimeBlock> blocks,
                                          const FrontendConfig& fcfg, const TimingConfig& timing) {
    FrontendStream env(fcfg, timing);
    FrontendStream asst(fcfg, timing);
    std::vector<BlockEmbeddings> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) {
        validate(b, timing);
        BlockEmbeddings be;
        be.block_index = b.block_index;
        be.env = env.push_block(b.env_frames);
        be.asst = asst.push_block(b.asst_frames);
        out.push_back(std::move(be));
    }
    return out;
}

InterleavedSequence build_sequence(std::span<const BlockEmbeddings> blocks,
                                   std::span<const LabeledToken> labels, StrategyKind strategy) {
    if (blocks.size() != labels.size())
        throw std::invalid_argument("build_sequence: " + std::to_string(blocks.size()) +
                                    " blocks vs " + std::to_string(labels.size()) + " labels");
    validate_labels(labels, strategy);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].env.size() != 2 || blocks[i].asst.size() != 2)
            throw std::invalid_argument("block " + std::to_string(i) +
                                        ": expected 2 embeddings per stream");
        if (i > 0 && blocks[i].block_index != blocks[i - 1].block_index + 1)
            throw std::invalid_argument("block indices must be consecutive");
        const auto lb = labels[i].token.block_index;
        if (lb != 0 && lb != blocks[i].block_index)
            throw std::invalid_argument("label " + std::to_string(i) +
                                        " is not aligned with block index " +
                                        std::to_string(blocks[i].block_index));
    }

    const auto inputs = input_stream(labels, strategy);
    InterleavedSequence seq;
    seq.strategy = strategy;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::int64_t bi = blocks[i].block_index;
        if (inputs[i]) {
            Token t = *inputs[i];
            t.block_index = bi;
            seq.items.push_back({SlotKind::TokenInput, {}, t, bi, 1.0});
        }
        for (const auto& e : blocks[i].env)
            seq.items.push_back({SlotKind::EnvEmbedding, e, {}, bi, 1.0});
        for (const auto& a : blocks[i].asst)
            seq.items.push_back({SlotKind::AsstEmbedding, a, {}, bi, 1.0});
        Token label = labels[i].token;
        label.block_index = bi;
        seq.items.push_back({SlotKind::TokenLabel, {}, label, bi, labels[i].loss_weight});
    }
    return seq;
}

InterleavedSequence build_sequence(std::span<const TimeBlock> blocks,
                                   std::span<const LabeledToken> labels, StrategyKind strategy,
                                   const FrontendConfig& fcfg, const TimingConfig& timing) {
    const auto embedded = embed_blocks(blocks, fcfg, timing);
    return build_sequence(embedded, labels, strategy);
}

Deinterleaved deinterleave(const InterleavedSequence& seq) {
    Deinterleaved out;
    const auto& items = seq.items;
    std::size_t i = 0;
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> input_item_index;  // item index of each block's TokenInput (or npos)
    std::vector<std::size_t> block_start_index;

    auto fail = [](std::size_t idx, const std::string& what) {
        throw std::invalid_argument("malformed interleaved layout at item " + std::to_string(idx) +
                                    ": " + what);
    };

    while (i < items.size()) {
        const std::int64_t bi = items[i].block_index;
        if (!out.blocks.empty() && bi != out.blocks.back().block_index + 1)
            fail(i, "expected block index " + std::to_string(out.blocks.back().block_index + 1));
        block_start_index.push_back(i);

        BlockEmbeddings be;
        be.block_index = bi;
        std::size_t input_idx = npos;

        if (items[i].kind == SlotKind::TokenInput) {
            input_idx = i;
            ++i;
        }
        for (int e = 0; e < 2; ++e, ++i) {
            if (i >= items.size() || items[i].kind != SlotKind::EnvEmbedding ||
                items[i].block_index != bi)
                fail(std::min(i, items.size() - 1),
                     "expected env embedding of block " + std::to_string(bi));
            be.env.push_back(items[i].embedding);
        }
        for (int a = 0; a < 2; ++a, ++i) {
            if (i >= items.size() || items[i].kind != SlotKind::AsstEmbedding ||
                items[i].block_index != bi)
                fail(std::min(i, items.size() - 1),
                     "expected asst embedding of block " + std::to_string(bi));
            be.asst.push_back(items[i].embedding);
        }
        if (i >= items.size() || items[i].kind != SlotKind::TokenLabel ||
            items[i].block_index != bi)
            fail(std::min(i, items.size() - 1),
                 "expected token label of block " + std::to_string(bi));
        out.blocks.push_back(std::move(be));
        out.labels.push_back({items[i].token, items[i].loss_weight});
        input_item_index.push_back(input_idx);
        ++i;
    }

    validate_labels(out.labels, seq.strategy);

    // The feedback stream is fully determined by the labels; reject sequences
    // that disagree with it.
    const auto expected = input_stream(out.labels, seq.strategy);
    for (std::size_t k = 0; k < expected.size(); ++k) {
        const bool has = input_item_index[k] != npos;
        if (expected[k].has_value() && !has)
            fail(block_start_index[k], "missing token input at block " + std::to_string(k));
        if (!expected[k].has_value() && has)
            fail(input_item_index[k], "unexpected token input at block " + std::to_string(k));
        if (has && !items[input_item_index[k]].token.same_content(*expected[k]))
            fail(input_item_index[k], "token input disagrees with the fed-back stream");
    }
    return out;
}

std::vector<LabeledToken> label_scheme(std::span<const BlockTruthRecord> truth,
                                       StrategyKind strategy, double ns_weight) {
    if (ns_weight <= 0.0) throw std::invalid_argument("ns_weight must be positive");
    std::vector<LabeledToken> labels;
    labels.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& t = truth[i];
        const auto bi = static_cast<std::int64_t>(i);
        LabeledToken lt;
        switch (strategy) {
            case StrategyKind::Explicit:
                switch (t.phase) {
                    case BlockPhase::Listen:
                    case BlockPhase::SpeakWait: lt.token = Token::think(bi); break;
                    case BlockPhase::ShiftToSpeak:
                    case BlockPhase::ShiftToListen: lt.token = Token::shift(bi); break;
                    case BlockPhase::SpeakText: lt.token = Token::text(t.response_symbol, bi); break;
                }
                break;
            case StrategyKind::Implicit:
                switch (t.phase) {
                    case BlockPhase::Listen:
                    case BlockPhase::ShiftToListen: lt.token = Token::listen(bi); break;
                    case BlockPhase::ShiftToSpeak:
                    case BlockPhase::SpeakWait: lt.token = Token::speak(bi); break;
                    case BlockPhase::SpeakText: lt.token = Token::text(t.response_symbol, bi); break;
                }
                break;
            case StrategyKind::ImplicitASR:
            case StrategyKind::ExplicitASR:
                switch (t.phase) {
                    case BlockPhase::Listen: lt.token = Token::text(t.env_symbol, bi); break;
                    case BlockPhase::SpeakWait: lt.token = Token::text(0, bi); break;
                    case BlockPhase::ShiftToSpeak:
                    case BlockPhase::ShiftToListen: lt.token = Token::shift(bi); break;
                    case BlockPhase::SpeakText: lt.token = Token::text(t.response_symbol, bi); break;
                }
                break;
            case StrategyKind::ExplicitNS:
                switch (t.phase) {
                    case BlockPhase::Listen:
                    case BlockPhase::SpeakWait:
                        lt.token = Token::shift(bi);
                        lt.loss_weight = -ns_weight;
                        break;
                    case BlockPhase::ShiftToSpeak:
                    case BlockPhase::ShiftToListen: lt.token = Token::shift(bi); break;
                    case BlockPhase::SpeakText: lt.token = Token::text(t.response_symbol, bi); break;
                }
                break;
        }
        labels.push_back(lt);
    }
    return labels;
}

void write_sequence_jsonl(std::ostream& out, const InterleavedSequence& seq) {
    json header{{"schema_version", kSchemaVersion},
                {"kind", "interleaved_sequence"},
                {"strategy", to_string(seq.strategy)},
                {"items", seq.items.size()}};
    out << header.dump() << '\n';
    for (const auto& item : seq.items) {
        json j{{"item", to_string(item.kind)}, {"block", item.block_index}};
        switch (item.kind) {
            case SlotKind::EnvEmbedding:
            case SlotKind::AsstEmbedding: j["values"] = item.embedding; break;
            case SlotKind::TokenInput: j["token"] = item.token; break;
            case SlotKind::TokenLabel:
                j["token"] = item.token;
                j["weight"] = item.loss_weight;
                break;
        }
        out << j.dump() << '\n';
    }
}

InterleavedSequence read_sequence_jsonl(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("interleaved sequence stream is empty");
    json header = json::parse(line);
    check_schema_version(header, "interleaved_sequence");
    if (header.value("kind", "") != "interleaved_sequence")
        throw ConfigError("not an interleaved_sequence file");

    InterleavedSequence seq;
    seq.strategy = strategy_from_string(header.at("strategy").get<std::string>());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        SlotItem item;
        item.kind = slot_kind_from_string(j.at("item").get<std::string>());
        item.block_index = j.at("block").get<std::int64_t>();
        switch (item.kind) {
            case SlotKind::EnvEmbedding:
            case SlotKind::AsstEmbedding:
                item.embedding = j.at("values").get<FeatureVector>();
                break;
            case SlotKind::TokenInput:
                item.token = j.at("token").get<Token>();
                item.token.block_index = item.block_index;
                break;
            case SlotKind::TokenLabel:
                item.token = j.at("token").get<Token>();
                item.token.block_index = item.block_index;
                item.loss_weight = j.at("weight").get<double>();
                break;
        }
        seq.items.push_back(std::move(item));
    }
    if (seq.items.size() != header.at("items").get<std::size_t>())
        throw IoError("interleaved sequence item count disagrees with header");
    return seq;
}

}  // namespace duplex
