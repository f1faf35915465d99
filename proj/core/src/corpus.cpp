#include "uceval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uceval/errors.hpp"
#include "uceval/rng.hpp"

namespace uceval {

namespace {

using nlohmann::json;

// Fixed stratification seed: mmlu_pro subsets must not depend on run seeds,
// otherwise two runs over "the same corpus" would see different questions.
constexpr uint64_t stratify_seed = 0x6d6d6c755f70726full;

std::string json_to_plain_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<uint64_t>());
    if (v.is_number_float()) {
        std::ostringstream os;
        os << v.get<double>();
        return os.str();
    }
    throw corpus_error("expected string or number, got: " + v.dump());
}

bool is_integer_string(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + i, s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::string to_string(CorpusKind k) {
    switch (k) {
        case CorpusKind::mt_cons: return "mt_cons";
        case CorpusKind::mmlu_pro: return "mmlu_pro";
        case CorpusKind::gsm8k: return "gsm8k";
        case CorpusKind::nonmcq: return "nonmcq";
    }
    return "unknown";
}

std::optional<CorpusKind> corpus_kind_from_string(const std::string& s) {
    if (s == "mt_cons") return CorpusKind::mt_cons;
    if (s == "mmlu_pro") return CorpusKind::mmlu_pro;
    if (s == "gsm8k") return CorpusKind::gsm8k;
    if (s == "nonmcq") return CorpusKind::nonmcq;
    return std::nullopt;
}

AnswerKey AnswerKey::of_letter(char c) {
    AnswerKey k;
    k.kind = AnswerKind::letter;
    k.letter = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return k;
}

AnswerKey AnswerKey::of_number(std::string n) {
    AnswerKey k;
    k.kind = AnswerKind::number;
    k.number = normalize_numeric(n);
    return k;
}

AnswerKey AnswerKey::of_span(std::string s) {
    AnswerKey k;
    k.kind = AnswerKind::span;
    k.span = std::move(s);
    return k;
}

std::string AnswerKey::display() const {
    switch (kind) {
        case AnswerKind::letter: return std::string(1, letter);
        case AnswerKind::number: return number;
        case AnswerKind::span: return span;
    }
    return {};
}

bool AnswerKey::operator==(const AnswerKey& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
        case AnswerKind::letter: return letter == other.letter;
        case AnswerKind::number:
            return normalize_numeric(number) == normalize_numeric(other.number);
        case AnswerKind::span: return span == other.span;
    }
    return false;
}

std::string normalize_numeric(const std::string& raw) {
    size_t b = 0, e = raw.size();
    while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string s = raw.substr(b, e - b);

    std::string sign;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        if (s[0] == '-') sign = "-";
        s.erase(s.begin());
    }
    if (!s.empty() && s[0] == '$') s.erase(s.begin());
    s.erase(std::remove(s.begin(), s.end(), ','), s.end());

    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (!s.empty() && s[0] == '.') s = "0" + s;
    // Collapse "-0" and strip redundant leading zeros ("007" -> "7").
    size_t nz = 0;
    while (nz + 1 < s.size() && s[nz] == '0' && s[nz + 1] != '.') ++nz;
    s = s.substr(nz);
    if (s == "0") sign.clear();
    return sign + s;
}

std::vector<char> Question::valid_letters() const {
    std::vector<char> out;
    out.reserve(choices.size());
    for (const auto& [letter, text] : choices) out.push_back(letter);
    return out;
}

std::string Question::render_prompt() const {
    if (choices.empty()) return prompt;
    std::string out = prompt;
    out += "\n";
    for (const auto& [letter, text] : choices) {
        out += "\n";
        out += letter;
        out += ". ";
        out += text;
    }
    return out;
}

namespace {

AnswerKey parse_gold(const json& g, const json& choices, CorpusKind kind) {
    if (g.is_object()) {
        if (g.contains("letter"))
            return AnswerKey::of_letter(g.at("letter").get<std::string>().at(0));
        if (g.contains("number"))
            return AnswerKey::of_number(json_to_plain_string(g.at("number")));
        if (g.contains("span"))
            return AnswerKey::of_span(g.at("span").get<std::string>());
        throw corpus_error("gold object lacks letter/number/span: " + g.dump());
    }
    if (g.is_number()) return AnswerKey::of_number(json_to_plain_string(g));
    if (g.is_string()) {
        std::string s = g.get<std::string>();
        if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0])) &&
            !choices.empty())
            return AnswerKey::of_letter(s[0]);
        if (kind == CorpusKind::gsm8k) return AnswerKey::of_number(s);
        return AnswerKey::of_span(s);
    }
    throw corpus_error("unparsable gold: " + g.dump());
}

Question parse_row(const std::string& line, CorpusKind kind) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw corpus_error(std::string("bad corpus row: ") + e.what());
    }
    Question q;
    q.corpus = kind;
    if (!j.contains("id")) throw corpus_error("corpus row lacks id: " + line);
    q.id = json_to_plain_string(j.at("id"));
    if (!j.contains("prompt"))
        throw corpus_error("corpus row lacks prompt: id=" + q.id);
    q.prompt = j.at("prompt").get<std::string>();
    q.domain_tag = j.value("domain", "");

    json choices = j.value("choices", json::array());
    for (const auto& c : choices) {
        char letter = static_cast<char>(
            std::toupper(static_cast<unsigned char>(c.at("letter").get<std::string>().at(0))));
        q.choices.emplace_back(letter, c.at("text").get<std::string>());
    }
    if (!q.choices.empty()) {
        if (q.choices.size() < 3 || q.choices.size() > 10)
            throw corpus_error("mcq choice count out of range: id=" + q.id);
        std::set<char> seen;
        for (size_t i = 0; i < q.choices.size(); ++i) {
            char expect = static_cast<char>('A' + i);
            if (q.choices[i].first != expect)
                throw corpus_error("choice letters must be A,B,... in order: id=" + q.id);
            if (!seen.insert(q.choices[i].first).second)
                throw corpus_error("duplicate choice letter: id=" + q.id);
        }
    }

    if (!j.contains("gold") || j.at("gold").is_null())
        throw corpus_error("corpus row lacks gold answer: id=" + q.id);
    q.gold = parse_gold(j.at("gold"), choices, kind);

    if (!q.choices.empty()) {
        q.format = QuestionFormat::mcq;
        if (q.gold.kind != AnswerKind::letter)
            throw corpus_error("mcq gold must be a letter: id=" + q.id);
        auto letters = q.valid_letters();
        if (std::find(letters.begin(), letters.end(), q.gold.letter) == letters.end())
            throw corpus_error("gold letter outside choice set: id=" + q.id);
    } else if (q.gold.kind == AnswerKind::number) {
        q.format = QuestionFormat::numeric;
    } else {
        q.format = QuestionFormat::free_span;
    }
    return q;
}

std::vector<Question> stratify_by_domain(std::vector<Question> rows, int limit) {
    if (limit <= 0 || static_cast<int>(rows.size()) <= limit) return rows;
    std::map<std::string, std::vector<Question>> by_domain;
    for (auto& q : rows) by_domain[q.domain_tag].push_back(std::move(q));

    int domains = static_cast<int>(by_domain.size());
    int base = limit / domains;
    int extra = limit % domains;

    std::vector<Question> out;
    int domain_index = 0;
    for (auto& [domain, qs] : by_domain) {
        auto rng = stream_for(stratify_seed, domain, "stratify");
        seeded_shuffle(qs, rng);
        int quota = base + (domain_index < extra ? 1 : 0);
        for (int i = 0; i < quota && i < static_cast<int>(qs.size()); ++i)
            out.push_back(std::move(qs[i]));
        ++domain_index;
    }
    return out;
}

}  // namespace

std::vector<Question> load_corpus(const std::string& path, CorpusKind kind,
                                  int limit) {
    std::ifstream in(path);
    if (!in) throw corpus_error("cannot open corpus file: " + path);

    CorpusKind row_kind = (kind == CorpusKind::nonmcq) ? CorpusKind::mt_cons : kind;
    std::vector<Question> rows;
    std::set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Question q = parse_row(line, row_kind);
        if (!ids.insert(q.id).second)
            throw corpus_error("duplicate question id: " + q.id);
        rows.push_back(std::move(q));
    }

    if (kind == CorpusKind::mmlu_pro) {
        rows = stratify_by_domain(std::move(rows), limit);
    } else if (limit > 0 && static_cast<int>(rows.size()) > limit) {
        rows.resize(limit);
    }

    if (kind == CorpusKind::nonmcq) {
        for (auto& q : rows) q = derive_nonmcq(q);
    }
    return rows;
}

Question derive_nonmcq(const Question& q) {
    if (q.format != QuestionFormat::mcq)
        throw corpus_error("derive_nonmcq requires an mcq question: id=" + q.id);
    Question out = q;
    for (const auto& [letter, text] : q.choices) {
        if (letter == q.gold.letter) {
            out.gold = AnswerKey::of_span(text);
            break;
        }
    }
    out.choices.clear();
    out.format = QuestionFormat::free_span;
    out.corpus = CorpusKind::nonmcq;
    return out;
}

namespace {

std::string perturb_number(const std::string& gold, SplitMix64& rng) {
    std::string norm = normalize_numeric(gold);
    for (int attempt = 0; attempt < 64; ++attempt) {
        uint64_t kind = rng.next_below(3);
        std::string candidate;
        if (kind == 0) {
            // Adjacent digit swap inside the digit run.
            std::string s = norm;
            std::vector<size_t> digit_pos;
            for (size_t i = 0; i < s.size(); ++i)
                if (std::isdigit(static_cast<unsigned char>(s[i]))) digit_pos.push_back(i);
            if (digit_pos.size() >= 2) {
                size_t pick = static_cast<size_t>(rng.next_below(digit_pos.size() - 1));
                std::swap(s[digit_pos[pick]], s[digit_pos[pick + 1]]);
                candidate = normalize_numeric(s);
            }
        } else if (kind == 1 && is_integer_string(norm)) {
            int64_t v = std::stoll(norm);
            int64_t k = 1 + static_cast<int64_t>(rng.next_below(10));
            candidate = std::to_string(rng.next_below(2) == 0 ? v + k : v - k);
        } else if (kind == 2 && is_integer_string(norm)) {
            int64_t v = std::stoll(norm);
            if (v % 10 == 0 && v != 0 && rng.next_below(2) == 0)
                candidate = std::to_string(v / 10);
            else
                candidate = std::to_string(v * 10);
        }
        if (!candidate.empty() && candidate != norm) return candidate;
    }
    // Degenerate golds (single repeated digit, zero) fall through to here.
    return normalize_numeric(is_integer_string(norm)
                                 ? std::to_string(std::stoll(norm) + 1)
                                 : norm + "1");
}

}  // namespace

WrongAnswerPool build_wrong_answer_pool(const Question& q,
                                        const std::vector<Question>& corpus,
                                        uint64_t seed) {
    WrongAnswerPool pool;
    pool.question_id = q.id;
    auto rng = stream_for(seed, q.id, "wrong_pool");

    if (q.format == QuestionFormat::mcq) {
        std::vector<char> candidates;
        for (char c : q.valid_letters())
            if (c != q.gold.letter) candidates.push_back(c);
        if (candidates.size() < 2)
            throw corpus_error("need two wrong letters: id=" + q.id);
        size_t first = static_cast<size_t>(rng.next_below(candidates.size()));
        pool.wrong1 = AnswerKey::of_letter(candidates[first]);
        candidates.erase(candidates.begin() + static_cast<ptrdiff_t>(first));
        size_t second = static_cast<size_t>(rng.next_below(candidates.size()));
        pool.wrong2 = AnswerKey::of_letter(candidates[second]);
        return pool;
    }
    if (q.format == QuestionFormat::numeric) {
        std::string own = normalize_numeric(q.gold.number);
        std::string borrowed;
        for (int attempt = 0; attempt < 256 && corpus.size() > 1; ++attempt) {
            const Question& other =
                corpus[static_cast<size_t>(rng.next_below(corpus.size()))];
            if (other.id == q.id || other.gold.kind != AnswerKind::number) continue;
            std::string candidate = normalize_numeric(other.gold.number);
            if (candidate != own) {
                borrowed = candidate;
                break;
            }
        }
        if (borrowed.empty()) borrowed = perturb_number(q.gold.number, rng);
        pool.wrong1 = AnswerKey::of_number(borrowed);
        std::string perturbed = perturb_number(q.gold.number, rng);
        for (int attempt = 0; attempt < 64 && perturbed == borrowed; ++attempt)
            perturbed = perturb_number(q.gold.number, rng);
        pool.wrong2 = AnswerKey::of_number(perturbed);
        return pool;
    }
    throw corpus_error("free-span pools derive from the mcq original: id=" + q.id);
}

WrongAnswerPool nonmcq_pool(const Question& mcq_question,
                            const WrongAnswerPool& mcq_pool) {
    if (mcq_question.format != QuestionFormat::mcq)
        throw corpus_error("nonmcq_pool requires the mcq original: id=" +
                           mcq_question.id);
    auto text_of = [&](char letter) -> std::string {
        for (const auto& [l, text] : mcq_question.choices)
            if (l == letter) return text;
        throw corpus_error("pool letter outside choice set: id=" + mcq_question.id);
    };
    WrongAnswerPool pool;
    pool.question_id = mcq_question.id;
    pool.wrong1 = AnswerKey::of_span(text_of(mcq_pool.wrong1.letter));
    pool.wrong2 = AnswerKey::of_span(text_of(mcq_pool.wrong2.letter));
    return pool;
}

}  // namespace uceval
