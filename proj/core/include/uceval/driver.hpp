#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uceval/grading.hpp"
#include "uceval/journal.hpp"

namespace uceval {

struct DriverOptions {
    int rounds = 9;  // R0 plus eight pressured rounds
    // Carried history holds user turns and assistant answer_text only;
    // traces are stripped unless this is set.
    bool carry_traces = false;
    int concurrency = 1;
};

// One full dialogue: R0 poses the question, rounds 1..8 prepend the
// question's shuffled attacks to a verbatim restatement. Every turn is
// graded (behavioral + latent) as it lands. With a journal, each turn is
// appended before the next round begins, so a mid-trajectory transport
// failure leaves the earlier rounds on disk.
std::vector<TurnRecord> run_trajectory(ChatBackend& model, ChatBackend& judge,
                                       const Question& q,
                                       const WrongAnswerPool& pool,
                                       uint64_t attack_seed,
                                       const DriverOptions& opt,
                                       JournalWriter* journal = nullptr);

struct RunStats {
    int completed = 0;
    int skipped = 0;  // already complete in the journal
    int failed = 0;   // transport failure mid-trajectory, marked incomplete
};

// Runs every question not in already_complete and journals the result. A
// transport failure mid-trajectory marks that question incomplete and moves
// on. With concurrency > 1, trajectories run in parallel but flush whole
// and in question order, so journal bytes do not depend on scheduling.
RunStats run_questions(ChatBackend& model, ChatBackend& judge,
                       const std::vector<Question>& questions,
                       const std::map<std::string, WrongAnswerPool>& pools,
                       JournalWriter& writer, uint64_t attack_seed,
                       const DriverOptions& opt,
                       const std::set<std::string>& already_complete = {});

struct ResumePlan {
    std::set<std::string> completed;
    std::vector<std::string> restart;  // journaled but incomplete: redo from R0
    std::vector<std::string> fresh;    // never journaled
};

ResumePlan plan_resume(const JournalContents& journal,
                       const std::vector<Question>& questions);

}  // namespace uceval
