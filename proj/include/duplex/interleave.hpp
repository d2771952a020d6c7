#ifndef DUPLEX_INTERLEAVE_HPP
#define DUPLEX_INTERLEAVE_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "duplex/frontend.hpp"
#include "duplex/timebase.hpp"

namespace duplex {

enum class StrategyKind { Implicit, Explicit, ImplicitASR, ExplicitASR, ExplicitNS };

std::string to_string(StrategyKind s);
StrategyKind strategy_from_string(const std::string& s);

// True for strategies whose emitted tokens are all fed back into the input
// sequence (Explicit, ExplicitASR, ExplicitNS).
bool feeds_back_all_tokens(StrategyKind s);

enum class SlotKind { EnvEmbedding, AsstEmbedding, TokenInput, TokenLabel };

std::string to_string(SlotKind k);

struct SlotItem {
    SlotKind kind = SlotKind::TokenLabel;
    FeatureVector embedding;  // EnvEmbedding / AsstEmbedding payload
    Token token;              // TokenInput / TokenLabel payload
    std::int64_t block_index = 0;
    double loss_weight = 1.0;  // negative only under ExplicitNS labels

    bool operator==(const SlotItem&) const = default;
};

struct LabeledToken {
    Token token;
    double loss_weight = 1.0;

    bool operator==(const LabeledToken&) const = default;
};

// The invertible per-block unit the interleaver works on: two 25 Hz
// embeddings per stream per 80 ms block.
struct BlockEmbeddings {
    std::int64_t block_index = 0;
    std::vector<FeatureVector> env;   // exactly 2
    std::vector<FeatureVector> asst;  // exactly 2

    bool operator==(const BlockEmbeddings&) const = default;
};

struct InterleavedSequence {
    std::vector<SlotItem> items;
    StrategyKind strategy = StrategyKind::Explicit;
};

// Runs both streams of each block through fresh FrontendStream accumulators.
std::vector<BlockEmbeddings> embed_blocks(std::span<const TimeBlock> blocks,
                                          const FrontendConfig& fcfg = {},
                                          const TimingConfig& timing = {});

// Per block, emits [(TokenInput)?, EnvEmbedding x2, AsstEmbedding x2,
// TokenLabel]. The fed-back token opens the block: it was decided before the
// block's audio arrives. Which blocks carry a TokenInput depends on the
// strategy:
//   Implicit / ImplicitASR - only speaking-state text tokens are fed back;
//   Explicit / ExplicitASR - every emitted token is fed back;
//   ExplicitNS             - the realized token stream is fed back (Think at
//                            non-transition silent blocks, Shift at
//                            transitions, Text at response blocks).
InterleavedSequence build_sequence(std::span<const BlockEmbeddings> blocks,
                                   std::span<const LabeledToken> labels, StrategyKind strategy);

InterleavedSequence build_sequence(std::span<const TimeBlock> blocks,
                                   std::span<const LabeledToken> labels, StrategyKind strategy,
                                   const FrontendConfig& fcfg = {},
                                   const TimingConfig& timing = {});

struct Deinterleaved {
    std::vector<BlockEmbeddings> blocks;
    std::vector<LabeledToken> labels;
};

// Exact inverse of build_sequence on its image. Malformed layouts are
// reported with the first offending item index.
Deinterleaved deinterleave(const InterleavedSequence& seq);

// Ground-truth block taxonomy used to derive training labels.
enum class BlockPhase { Listen, ShiftToSpeak, SpeakText, SpeakWait, ShiftToListen };

struct BlockTruthRecord {
    BlockPhase phase = BlockPhase::Listen;
    int response_symbol = 0;  // Text payload during SpeakText blocks
    int env_symbol = 0;       // environment transcript symbol heard (0 = none)
};

// Per-block (token, loss weight) labels for one strategy. ns_weight is the
// magnitude of the negative weight under ExplicitNS.
std::vector<LabeledToken> label_scheme(std::span<const BlockTruthRecord> truth,
                                       StrategyKind strategy, double ns_weight = 0.1);

// Rejects label streams carrying tokens a strategy never emits.
void validate_labels(std::span<const LabeledToken> labels, StrategyKind strategy);

// JSONL: a schema-version header line, then one SlotItem per line.
void write_sequence_jsonl(std::ostream& out, const InterleavedSequence& seq);
InterleavedSequence read_sequence_jsonl(std::istream& in);

}  // namespace duplex

#endif  // DUPLEX_INTERLEAVE_HPP
