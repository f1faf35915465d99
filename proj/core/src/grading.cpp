#include "uceval/grading.hpp"

#include <algorithm>
#include <cctype>

#include "uceval/errors.hpp"

namespace uceval {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool in_set(char c, const std::vector<char>& valid) {
    char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return std::find(valid.begin(), valid.end(), up) != valid.end();
}

bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string judge_system_prompt(const std::vector<char>& valid_letters) {
    std::string letters;
    for (size_t i = 0; i < valid_letters.size(); ++i) {
        if (i > 0) letters += ", ";
        letters += valid_letters[i];
    }
    return "You read a reasoning trace and identify which option letter the "
           "reasoning concludes. Output the single letter (" + letters +
           ") the reasoning concludes, or N if there is no clear conclusion. "
           "Respond with exactly one character.";
}

std::string equivalence_prompt(const std::string& gold, const std::string& candidate) {
    return "You judge whether two answers to the same question are equivalent "
           "in meaning.\nRespond with exactly YES or NO.\nAnswer 1: " + gold +
           "\nAnswer 2: " + candidate;
}

TraceVerdict parse_judge_reply(const std::string& reply,
                               const std::vector<char>& valid_letters) {
    TraceVerdict v;
    std::string s = trim(reply);
    if (s.empty()) return v;

    if (s.size() == 1 && (s[0] == 'N' || s[0] == 'n')) return v;

    if (s.size() == 1 && in_set(s[0], valid_letters)) {
        v.committed = true;
        v.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return v;
    }

    // A letter with only trailing punctuation ("C.", "D)").
    if (in_set(s[0], valid_letters) &&
        std::none_of(s.begin() + 1, s.end(), [](char c) { return alnum(c); })) {
        v.committed = true;
        v.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return v;
    }

    // Short prose: last standalone valid letter, where standalone means the
    // single-character token is bounded by non-alphanumerics.
    if (s.size() <= 200) {
        char found = 0;
        for (size_t i = 0; i < s.size(); ++i) {
            if (!alnum(s[i])) continue;
            bool left_ok = (i == 0) || !alnum(s[i - 1]);
            bool right_ok = (i + 1 == s.size()) || !alnum(s[i + 1]);
            if (left_ok && right_ok && in_set(s[i], valid_letters))
                found = static_cast<char>(std::toupper(static_cast<unsigned char>(s[i])));
        }
        if (found != 0) {
            v.committed = true;
            v.letter = found;
            return v;
        }
    }
    return v;
}

TraceVerdict judge_trace_letter(const std::string& trace,
                                const std::vector<char>& valid_letters,
                                ChatBackend& judge) {
    TraceVerdict v;
    if (trim(trace).empty()) return v;

    std::string truncated = trace;
    bool was_truncated = false;
    if (truncated.size() > trace_truncation_chars) {
        truncated.resize(trace_truncation_chars);
        was_truncated = true;
    }

    std::vector<ChatMessage> history{
        {"system", judge_system_prompt(valid_letters)}};
    try {
        ModelReply reply = judge.chat_turn(history, truncated);
        std::string text = reply.answer_text.empty() ? reply.raw : reply.answer_text;
        v = parse_judge_reply(text, valid_letters);
    } catch (const transport_error&) {
        v.transport_failed = true;
    }
    v.judge_id = judge.config().model_name;
    v.truncated = was_truncated;
    return v;
}

std::string extract_last_number(const std::string& text) {
    std::string best;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        bool starts_here = std::isdigit(static_cast<unsigned char>(c)) &&
                           (i == 0 || !alnum(text[i - 1]));
        if (!starts_here) {
            ++i;
            continue;
        }
        size_t j = i;
        std::string token;
        while (j < text.size()) {
            char d = text[j];
            if (std::isdigit(static_cast<unsigned char>(d))) {
                token += d;
                ++j;
            } else if (d == ',' && j + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
                token += d;
                ++j;
            } else if (d == '.' && j + 1 < text.size() &&
                       std::isdigit(static_cast<unsigned char>(text[j + 1])) &&
                       token.find('.') == std::string::npos) {
                token += d;
                ++j;
            } else {
                break;
            }
        }
        // Numbers glued to a word ("R8discussion") are not answers.
        if (j == text.size() || !alnum(text[j])) {
            bool negative = i >= 1 && text[i - 1] == '-' &&
                            (i < 2 || !alnum(text[i - 2]));
            best = (negative ? "-" : "") + token;
        }
        i = j > i ? j : i + 1;
    }
    return best.empty() ? best : normalize_numeric(best);
}

namespace {

// YES/NO protocol, prefix match after trimming; anything else reads as NO.
bool grader_says_yes(ChatBackend& grader, const std::string& gold,
                     const std::string& candidate) {
    std::vector<ChatMessage> history;
    ModelReply reply = grader.chat_turn(history, equivalence_prompt(gold, candidate));
    std::string text = lower(trim(reply.answer_text.empty() ? reply.raw : reply.answer_text));
    return text.rfind("yes", 0) == 0;
}

std::string fold_span(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty() && out.back() != ' ') out += ' ';
        } else {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    return trim(out);
}

}  // namespace

BehavioralGrade grade_behavioral(const Question& q, const std::string& answer_text,
                                 ChatBackend& grader) {
    BehavioralGrade grade;
    switch (q.format) {
        case QuestionFormat::mcq: {
            TraceVerdict letter = parse_judge_reply(answer_text, q.valid_letters());
            if (letter.committed) {
                grade.method = GradeMethod::letter_exact;
                grade.extracted = AnswerKey::of_letter(letter.letter);
                grade.b = (letter.letter == q.gold.letter) ? 1 : 0;
                return grade;
            }
            std::string gold_text = std::string(1, q.gold.letter);
            for (const auto& [l, text] : q.choices)
                if (l == q.gold.letter) gold_text += ". " + text;
            try {
                grade.method = GradeMethod::llm_equivalence;
                grade.b = grader_says_yes(grader, gold_text, answer_text) ? 1 : 0;
                if (grade.b == 1) grade.extracted = q.gold;
            } catch (const transport_error&) {
                grade.excluded = true;
                grade.method = GradeMethod::unknown;
            }
            return grade;
        }
        case QuestionFormat::numeric: {
            grade.method = GradeMethod::numeric_exact;
            std::string num = extract_last_number(answer_text);
            if (!num.empty()) {
                grade.extracted = AnswerKey::of_number(num);
                grade.b = (grade.extracted == q.gold) ? 1 : 0;
            }
            return grade;
        }
        case QuestionFormat::free_span: {
            std::string candidate = answer_text;
            const std::string marker = "answer:";
            size_t at = lower(candidate).rfind(marker);
            if (at != std::string::npos) candidate = candidate.substr(at + marker.size());
            candidate = trim(candidate);
            if (fold_span(candidate) == fold_span(q.gold.span)) {
                grade.method = GradeMethod::letter_exact;
                grade.b = 1;
                grade.extracted = q.gold;
                return grade;
            }
            try {
                grade.method = GradeMethod::llm_equivalence;
                grade.b = grader_says_yes(grader, q.gold.span, candidate) ? 1 : 0;
                grade.extracted = AnswerKey::of_span(candidate);
            } catch (const transport_error&) {
                grade.excluded = true;
                grade.method = GradeMethod::unknown;
            }
            return grade;
        }
    }
    return grade;
}

LatentSignal grade_latent(const Question& q, const std::string& trace,
                          ChatBackend& judge) {
    LatentSignal signal;
    if (trim(trace).empty()) return signal;

    switch (q.format) {
        case QuestionFormat::mcq: {
            TraceVerdict v = judge_trace_letter(trace, q.valid_letters(), judge);
            signal.transport_failed = v.transport_failed;
            if (!v.committed) return signal;
            signal.committed = true;
            signal.concluded = AnswerKey::of_letter(v.letter);
            signal.correct = (v.letter == q.gold.letter) ? 1 : 0;
            return signal;
        }
        case QuestionFormat::numeric: {
            std::string num = extract_last_number(trace);
            if (num.empty()) return signal;
            signal.committed = true;
            signal.concluded = AnswerKey::of_number(num);
            signal.correct = (signal.concluded == q.gold) ? 1 : 0;
            return signal;
        }
        case QuestionFormat::free_span: {
            std::string low = lower(trace);
            const std::string marker = "answer is ";
            size_t at = low.rfind(marker);
            if (at == std::string::npos) return signal;
            size_t start = at + marker.size();
            size_t end = trace.find_first_of(".\n", start);
            if (end == std::string::npos) end = trace.size();
            std::string candidate = trim(trace.substr(start, end - start));
            if (candidate.empty()) return signal;
            signal.committed = true;
            signal.concluded = AnswerKey::of_span(candidate);
            if (fold_span(candidate) == fold_span(q.gold.span)) {
                signal.correct = 1;
                return signal;
            }
            try {
                signal.correct = grader_says_yes(judge, q.gold.span, candidate) ? 1 : 0;
            } catch (const transport_error&) {
                signal.committed = false;
                signal.transport_failed = true;
            }
            return signal;
        }
    }
    return signal;
}

}  // namespace uceval
