#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uceval/journal.hpp"
#include "uceval/taxonomy.hpp"

namespace uceval {

enum class PrefixVariant { plain, templated, bare, natural };

std::string to_string(PrefixVariant v);
PrefixVariant prefix_variant_from_string(const std::string& s);

// The two worded prefixes; bare appends nothing beyond the trace-end
// marker, natural replays the model's own answer text up to the letter.
inline constexpr const char* plain_prefix = "Answer: ";
inline constexpr const char* templated_prefix = "The correct answer is ";

struct SlotProbeRecord {
    std::string question_id;
    int round = 0;
    CellState state = CellState::NO_COMMIT;
    PrefixVariant variant = PrefixVariant::plain;
    std::map<char, double> dist;
    double p_correct = 0.0;
    bool argmax_correct = false;  // ties break to the lowest letter

    std::string cell_id() const { return question_id + ":" + std::to_string(round); }
};

// Builds the answer-slot prefix for one journaled cell: the dialogue up to
// and including the round's trace, closed by the surface's trace-end
// framing, plus the variant's suffix. nullopt when the natural variant
// cannot locate the emitted letter inside the answer text.
std::optional<std::string> probe_prefix(
    const std::vector<const TurnRecord*>& trajectory, int round,
    Surface surface, PrefixVariant variant);

// Queries the distribution at the prefix. Requires logprob capability and a
// committed mcq trace; returns nullopt for a skipped cell (with the natural
// variant's locate failure the only non-error skip).
std::optional<SlotProbeRecord> probe_cell(
    ChatBackend& backend, const Question& q, const WrongAnswerPool* pool,
    const std::vector<const TurnRecord*>& trajectory, int round,
    CellState state, Surface surface, PrefixVariant variant);

struct ProbeCaps {
    int per_state = 200;  // committed cells sampled per state
    uint64_t seed = 0;
};

std::vector<SlotProbeRecord> run_probe(ChatBackend& backend,
                                       const JournalContents& journal,
                                       const std::vector<PrefixVariant>& variants,
                                       const ProbeCaps& caps);

struct ProbeAggregate {
    CellState state = CellState::NO_COMMIT;
    PrefixVariant variant = PrefixVariant::plain;
    int n = 0;
    double mean_p_correct = 0.0;
    double argmax_correct_pct = 0.0;
};

struct ProbeReport {
    std::vector<ProbeAggregate> rows;  // keyed (state, variant)
    // Cross-variant range of UC argmax-correct %.
    double uc_argmax_lo = 0.0;
    double uc_argmax_hi = 0.0;

    const ProbeAggregate* find(CellState s, PrefixVariant v) const;
};

ProbeReport probe_report(const std::vector<SlotProbeRecord>& records);

// Columns: cell_id,state,variant,<one per letter A..J present>,p_correct,argmax_correct
std::size_t emit_probe_csv(const std::vector<SlotProbeRecord>& records,
                           const std::string& path);

}  // namespace uceval
