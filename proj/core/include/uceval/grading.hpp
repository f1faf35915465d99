#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uceval/corpus.hpp"
#include "uceval/model_client.hpp"

namespace uceval {

inline constexpr std::size_t trace_truncation_chars = 6000;
inline constexpr int judge_max_tokens = 4;

// Instruction given to the trace judge, with the question's letter set
// substituted for the placeholder. The judge sees only this and the trace:
// never the question, never the gold answer.
std::string judge_system_prompt(const std::vector<char>& valid_letters);

// Two-line YES/NO instruction used when letter extraction cannot decide
// (free-span answers, malformed mcq answers). Shipped in data/prompts/.
std::string equivalence_prompt(const std::string& gold, const std::string& candidate);

enum class JudgedLetter : char { abstain = 'N' };

struct TraceVerdict {
    bool committed = false;
    char letter = 'N';  // valid only when committed
    std::string judge_id;
    bool truncated = false;
    bool transport_failed = false;  // distinct from a judged "N"
};

// Defensive parser for the judge's one-character protocol. Total and
// case-insensitive on the letter; never returns a letter outside
// valid_letters. Accepts, in order: literal "N" (abstain); a bare valid
// letter; a valid letter followed only by non-alphanumerics; otherwise the
// last standalone valid letter in a reply of at most 200 characters, where
// standalone means bounded by non-alphanumerics; otherwise abstain.
TraceVerdict parse_judge_reply(const std::string& reply,
                               const std::vector<char>& valid_letters);

// Runs the judge over the (truncated) trace. Empty trace short-circuits to
// abstain. Transport failure after retries comes back as an abstain with
// transport_failed set so it can be excluded rather than counted as ⊥.
TraceVerdict judge_trace_letter(const std::string& trace,
                                const std::vector<char>& valid_letters,
                                ChatBackend& judge);

enum class GradeMethod { letter_exact, numeric_exact, llm_equivalence, unknown };

struct BehavioralGrade {
    int b = 0;
    GradeMethod method = GradeMethod::unknown;
    AnswerKey extracted;
    bool excluded = false;  // grader transport failure
};

// Behavioral correctness of the emitted answer. mcq: deterministic letter
// extraction (same defensive rules as parse_judge_reply) against gold, with
// an equivalence-grader fallback when no letter is extractable. numeric:
// last number in answer_text, normalized exact match. free_span:
// equivalence grader against the gold span.
BehavioralGrade grade_behavioral(const Question& q, const std::string& answer_text,
                                 ChatBackend& grader);

// Latent conclusion of the trace in the question's answer domain. mcq goes
// through judge_trace_letter; numeric takes the last number in the trace;
// free_span asks the grader whether the trace's final sentence names the
// gold span. committed=false maps to ⊥.
struct LatentSignal {
    bool committed = false;
    int correct = 0;  // concluded value == gold; valid only when committed
    AnswerKey concluded;
    bool transport_failed = false;
};

LatentSignal grade_latent(const Question& q, const std::string& trace,
                          ChatBackend& judge);

// Last standalone number in a text, normalized; empty when none. Used for
// numeric behavioral extraction and numeric trace conclusions.
std::string extract_last_number(const std::string& text);

}  // namespace uceval
