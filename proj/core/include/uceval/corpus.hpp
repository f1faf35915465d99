#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace uceval {

enum class CorpusKind { mt_cons, mmlu_pro, gsm8k, nonmcq };
enum class QuestionFormat { mcq, free_span, numeric };
enum class AnswerKind { letter, number, span };

std::string to_string(CorpusKind k);
std::optional<CorpusKind> corpus_kind_from_string(const std::string& s);

// Exactly one of letter/number/span is populated, matching kind.
// Numbers are kept as exact decimal strings and compared after
// normalization (commas stripped, leading "$" dropped, trailing
// fractional zeros removed).
struct AnswerKey {
    AnswerKind kind = AnswerKind::letter;
    char letter = 0;      // 'A'..'J'
    std::string number;   // exact decimal string
    std::string span;

    static AnswerKey of_letter(char c);
    static AnswerKey of_number(std::string n);
    static AnswerKey of_span(std::string s);

    std::string display() const;
    bool operator==(const AnswerKey& other) const;
    bool operator!=(const AnswerKey& other) const { return !(*this == other); }
};

// Commas stripped, leading '$' dropped, trailing fractional zeros (and a
// bare trailing '.') removed, surrounding whitespace trimmed.
std::string normalize_numeric(const std::string& raw);

// One benchmark item. For mcq, choices hold (letter, text) with letters a
// duplicate-free prefix of A..J and 3 <= |choices| <= 10.
struct Question {
    std::string id;
    CorpusKind corpus = CorpusKind::mt_cons;
    std::string prompt;  // stem only; choices are carried structurally
    std::vector<std::pair<char, std::string>> choices;
    AnswerKey gold;
    std::string domain_tag;
    QuestionFormat format = QuestionFormat::mcq;

    std::vector<char> valid_letters() const;
    // Prompt plus the lettered choice list for mcq; bare prompt otherwise.
    std::string render_prompt() const;
};

struct WrongAnswerPool {
    std::string question_id;
    AnswerKey wrong1;
    AnswerKey wrong2;
};

// Loads a line-delimited JSON corpus file. Each row is an object
// {id, prompt, choices: [{letter, text}], gold: {letter|number|span}, domain}.
// Rows with missing gold answers are rejected, not skipped. For mmlu_pro the
// result is stratified per domain (counts differ by at most one) using a
// fixed-seed shuffle within each domain; other corpora keep file order.
// kind == nonmcq loads mcq rows and derives the free-span variant.
std::vector<Question> load_corpus(const std::string& path, CorpusKind kind,
                                  int limit);

// Strips the choices: gold becomes the text of the gold choice, format
// becomes free_span. Errors if q is not mcq.
Question derive_nonmcq(const Question& q);

// Seeded wrong-answer pool. MCQ: two distinct non-gold letters.
// Numeric: wrong1 is another question's gold answer, wrong2 a perturbation
// of the gold (adjacent digit swap, +-k with k in [1,10], or x10 / /10),
// re-drawn until distinct from gold and wrong1. Free-span questions are not
// supported here; see nonmcq_pool.
WrongAnswerPool build_wrong_answer_pool(const Question& q,
                                        const std::vector<Question>& corpus,
                                        uint64_t seed);

// Pool for the derived free-span variant: build on the original mcq
// question, then map the drawn letters to their choice texts.
WrongAnswerPool nonmcq_pool(const Question& mcq_question,
                            const WrongAnswerPool& mcq_pool);

}  // namespace uceval
