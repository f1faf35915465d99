#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "uceval/model_client.hpp"

namespace uceval {

// Scripted oracle backend. Every draw is keyed by (seed, question_id,
// purpose, round), so any cell of any trajectory can be recomputed in
// isolation without replaying the dialogue.
struct SimProfile {
    double p0_correct = 0.9;     // P(round-0 answer is gold)
    double flip_hazard = 0.05;   // per-round P(first behavioral flip)
    double uc_given_flip = 0.5;  // P(trace still concludes gold | answer wrong)
    double trace_abstain = 0.0;  // P(trace carries no conclusion)
    double contamination = 0.0;  // P(trace of a correct answer concludes the
                                 // suggested wrong option instead)
    uint64_t seed = 0;
};

// Two-point distribution scheme for the scripted answer-slot probe. Per
// state, the argmax lands on gold with probability argmax_rate; the mass on
// gold is p_when_top on those draws and p_when_nontop otherwise, so the mean
// equals argmax_rate * p_when_top + (1 - argmax_rate) * p_when_nontop.
struct SimProbeState {
    double argmax_rate;
    double p_when_top;
    double p_when_nontop;

    double mean() const {
        return argmax_rate * p_when_top + (1.0 - argmax_rate) * p_when_nontop;
    }
};

struct SimProbeModel {
    SimProbeState fc;
    SimProbeState uc;
    SimProbeState fi;
    // Prefix wording shifts the argmax rate for answer-wrong-trace-right
    // cells; the plain rate is uc.argmax_rate.
    double uc_argmax_templated = 0.912;
    double uc_argmax_bare = 0.874;
    double uc_argmax_natural = 0.862;

    // Means pinned to 0.96 / 0.82 / 0.05 with argmax rates 0.980 / 0.838 /
    // 0.015; the dependent leg of each pair is solved so the mean is exact.
    static SimProbeModel reference();
};

// What the scripted oracle decided for one (question, round) cell.
// Contamination hits behavioral-correct pressured cells (rounds >= 1): the
// trace names the attacker's option in its concluding sentence, so the
// trace judge reads the attacker letter while the underlying derivation
// still reached gold. trace_conclusion is what the judge will read;
// true_conclusion is what the derivation actually reached, and is what a
// regeneration turn falls back to when contamination does not capture it.
struct SimCell {
    int round = 0;
    bool behavioral = false;   // emitted == gold
    AnswerKey emitted;
    bool abstained = false;    // trace text carries no conclusion sentence
    AnswerKey trace_conclusion;  // as judged; meaningful only when !abstained
    AnswerKey true_conclusion;
    bool contaminated = false;
    // The wrong option "in play" at this round: the attack's suggested wrong
    // when the round's attack carries a slot, a seeded draw otherwise.
    AnswerKey attacker;
};

// Recomputes the scripted decision for one cell. Rounds 1..8 resolve their
// attack from shuffled_attack_order(question.id, profile.seed); pool may be
// null only for questions whose corpus never fills a wrong slot.
SimCell simulate_cell(const SimProfile& profile, const Question& question,
                      const WrongAnswerPool* pool, int round);

// Scripted traces end with this sentence prefix; the scripted judge reads
// the conclusion back out from the last occurrence.
inline constexpr const char* sim_conclusion_prefix = "The answer is ";

// Backend whose replies follow simulate_cell. Requires a TurnContext with a
// question on every call; supports next_token_letter_distribution.
std::unique_ptr<ChatBackend> make_sim_backend(
    const BackendConfig& cfg, const SimProfile& profile,
    const SimProbeModel& probe = SimProbeModel::reference());

// Judge with configurable agreement behavior: reads the concluding sentence
// out of the trace it is shown, then agrees with it, abstains ("N"), or
// names a different valid letter, at the configured rates. agree=1 is the
// faithful in-house judge for simulated runs.
struct ScriptedJudgeProfile {
    double agree = 1.0;
    double abstain = 0.0;
    double diff = 0.0;
    uint64_t seed = 0;
};

std::unique_ptr<ChatBackend> make_scripted_judge(const ScriptedJudgeProfile& profile);

// Deterministic four-choice corpus for scripted runs: ids sim-0001.., gold
// letters drawn per question from the seed, domains cycling over four tags.
std::vector<Question> synthetic_corpus(int n, uint64_t seed);

}  // namespace uceval
