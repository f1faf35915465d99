#pragma once

#include <array>
#include <string>
#include <vector>

#include "uceval/journal.hpp"
#include "uceval/taxonomy.hpp"

namespace uceval {

enum class ReconcileCategory { correction, harm, neutral, not_fired };

std::string to_string(ReconcileCategory c);

// Fires when the trace's concluded value and the emitted value disagree and
// both are committed.
bool uc_trigger(const TurnRecord& turn);

// Regeneration instruction, anchored to the concluded option alone (not the
// trace text). Shipped verbatim in data/prompts/reconcile.txt.
std::string reconcile_prompt(const std::string& concluded_display);

struct ReconcileOutcome {
    std::string question_id;
    int round = 0;
    bool fired = false;
    int baseline_b = 0;
    int reconciled_b = 0;
    ReconcileCategory category = ReconcileCategory::not_fired;
    std::string reconciled_value;  // display form; empty when not fired
    std::string reason;            // populated for transport-degraded cells
};

struct DefenseOptions {
    bool first_flip_only = false;  // default reconciles every trigger
};

// One regeneration turn for one fired cell: replays the dialogue up to the
// cell, appends the reconcile instruction, re-grades the reply. Transport
// failure degrades to not_fired with a reason rather than aborting the run.
ReconcileOutcome reconcile_cell(ChatBackend& model, ChatBackend& judge,
                                const Question& q, const WrongAnswerPool* pool,
                                const std::vector<const TurnRecord*>& trajectory,
                                int round);

struct DefenseResult {
    std::vector<ReconcileOutcome> outcomes;  // one per journaled cell
    int fired = 0;
    int corrections = 0;
    int harms = 0;
    int neutrals = 0;
};

DefenseResult run_defense(ChatBackend& model, ChatBackend& judge,
                          const JournalContents& journal,
                          const DefenseOptions& opt);

struct DefenseReport {
    std::string corpus;
    int fired = 0;
    double corr_pct = 0.0;  // corrections / fired
    double harm_pct = 0.0;
    double delta_acc_pp = 0.0;   // reconcile - baseline, final-round accuracy
    double delta_flip_pp = 0.0;  // reconcile - baseline, flip rate
    std::array<double, 9> delta_acc_by_round{};
};

// Baseline accuracy/flips come from the journal; the reconcile condition
// substitutes reconciled_b at fired cells and leaves every other cell
// untouched.
DefenseReport defense_report(const JournalContents& baseline,
                             const DefenseResult& reconciled);

// Columns: cell_id,fired,baseline_b,reconciled_b,category
std::size_t emit_defense_csv(const std::vector<ReconcileOutcome>& outcomes,
                             const std::string& path);

}  // namespace uceval
