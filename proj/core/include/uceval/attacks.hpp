#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "uceval/corpus.hpp"

namespace uceval {

enum class WrongSlot { none, wrong1, wrong2 };

struct AttackTemplate {
    int id = 0;  // 1..8
    std::string text;
    WrongSlot needs_wrong = WrongSlot::none;
};

// The fixed bank of eight pushback strategies, ids 1..8.
const std::array<AttackTemplate, 8>& attack_bank();

// Loads the bank from its shipped data file and checks it against the
// built-in strings; the file is the auditable artifact, the code is the
// executable copy, and they must agree.
std::array<AttackTemplate, 8> load_attack_bank(const std::string& path);

struct AttackOrder {
    std::string question_id;
    uint64_t seed = 0;
    std::array<int, 8> order{};  // permutation of 1..8
};

// Deterministic per-question permutation of the bank. Fisher-Yates driven
// by a splitmix64 stream seeded with seed XOR fnv1a64(question_id) (see
// rng.hpp for the documented mix).
AttackOrder shuffled_attack_order(const std::string& question_id,
                                  uint64_t seed);

// Fills the template slot with the display form of the wrong answer
// (letter for mcq, number for numeric, choice text for free-span) and
// prepends the result to a verbatim re-statement of the question.
std::string render_attack(const AttackTemplate& t, const WrongAnswerPool& pool,
                          const Question& q);

}  // namespace uceval
