#include "uceval/journal.hpp"

#include <sstream>

#include "uceval/errors.hpp"

namespace uceval {

using nlohmann::json;

namespace {

std::string backend_kind_name(BackendKind k) {
    return k == BackendKind::http_chat ? "http_chat" : "simulated";
}

BackendKind backend_kind_from_name(const std::string& s) {
    if (s == "http_chat") return BackendKind::http_chat;
    if (s == "simulated") return BackendKind::simulated;
    throw journal_error("unknown backend kind in journal: " + s);
}

std::string digest_hex(uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(digest));
    return buf;
}

json question_to_json(const Question& q, const WrongAnswerPool& pool) {
    json choices = json::array();
    for (const auto& [letter, text] : q.choices)
        choices.push_back({{"letter", std::string(1, letter)}, {"text", text}});
    json gold;
    switch (q.gold.kind) {
        case AnswerKind::letter: gold = {{"letter", std::string(1, q.gold.letter)}}; break;
        case AnswerKind::number: gold = {{"number", q.gold.number}}; break;
        case AnswerKind::span: gold = {{"span", q.gold.span}}; break;
    }
    return json{{"type", "question"},
                {"id", q.id},
                {"corpus", to_string(q.corpus)},
                {"prompt", q.prompt},
                {"choices", choices},
                {"gold", gold},
                {"domain", q.domain_tag},
                {"wrong1", pool.wrong1.display()},
                {"wrong2", pool.wrong2.display()}};
}

AnswerKey answer_key_from_json(const json& g) {
    if (g.contains("letter")) return AnswerKey::of_letter(g.at("letter").get<std::string>().at(0));
    if (g.contains("number")) return AnswerKey::of_number(g.at("number").get<std::string>());
    return AnswerKey::of_span(g.at("span").get<std::string>());
}

}  // namespace

json to_json(const RunHeader& h) {
    return json{{"type", "run_header"},
                {"version", journal_version},
                {"digest", digest_hex(h.digest)},
                {"seed", h.seed},
                {"model", h.model},
                {"corpus", h.corpus_name},
                {"backend", backend_kind_name(h.backend)},
                {"surface", to_string(h.surface)},
                {"mode", h.mode},
                {"rounds", h.rounds}};
}

RunHeader run_header_from_json(const json& j) {
    RunHeader h;
    h.digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
    h.seed = j.at("seed").get<uint64_t>();
    h.model = j.at("model").get<std::string>();
    h.corpus_name = j.at("corpus").get<std::string>();
    h.backend = backend_kind_from_name(j.at("backend").get<std::string>());
    h.surface = surface_from_string(j.at("surface").get<std::string>());
    h.mode = j.at("mode").get<std::string>();
    h.rounds = j.at("rounds").get<int>();
    return h;
}

json to_json(const TurnRecord& t) {
    return json{{"type", "turn"},
                {"question_id", t.question_id},
                {"round", t.round},
                {"attack_id", t.attack_id},
                {"user_msg", t.user_msg},
                {"raw", t.raw},
                {"trace", t.trace},
                {"answer_text", t.answer_text},
                {"emitted", t.emitted},
                {"behavioral", t.behavioral},
                {"latent", t.latent},
                {"trace_value", t.trace_value},
                {"state", t.state},
                {"wall_time_ms", t.wall_time_ms},
                {"prompt_tokens", t.usage.prompt_tokens},
                {"completion_tokens", t.usage.completion_tokens}};
}

TurnRecord turn_record_from_json(const json& j) {
    TurnRecord t;
    t.question_id = j.at("question_id").get<std::string>();
    t.round = j.at("round").get<int>();
    t.attack_id = j.at("attack_id").get<int>();
    t.user_msg = j.at("user_msg").get<std::string>();
    t.raw = j.at("raw").get<std::string>();
    t.trace = j.at("trace").get<std::string>();
    t.answer_text = j.at("answer_text").get<std::string>();
    t.emitted = j.at("emitted").get<std::string>();
    t.behavioral = j.at("behavioral").get<bool>();
    t.latent = j.at("latent").get<int>();
    t.trace_value = j.at("trace_value").get<std::string>();
    t.state = j.at("state").get<std::string>();
    t.wall_time_ms = j.at("wall_time_ms").get<int64_t>();
    t.usage.prompt_tokens = j.at("prompt_tokens").get<int64_t>();
    t.usage.completion_tokens = j.at("completion_tokens").get<int64_t>();
    return t;
}

JournalWriter::JournalWriter(const std::string& path, const RunHeader& header)
    : path_(path) {
    std::ifstream existing(path);
    if (existing) {
        std::string first_line;
        std::getline(existing, first_line);
        if (!first_line.empty()) {
            json j;
            try {
                j = json::parse(first_line);
            } catch (const json::exception& e) {
                throw journal_error("corrupt journal header in " + path + ": " + e.what());
            }
            RunHeader stored = run_header_from_json(j);
            if (stored.digest != header.digest)
                throw journal_error(
                    "journal " + path + " was written under a different "
                    "configuration (digest " + digest_hex(stored.digest) +
                    " vs " + digest_hex(header.digest) + "); refusing to append");
            existing.close();
            out_.open(path, std::ios::app);
            if (!out_) throw journal_error("cannot append to journal: " + path);
            return;
        }
    }
    out_.open(path, std::ios::trunc);
    if (!out_) throw journal_error("cannot create journal: " + path);
    write_line(to_json(header));
}

void JournalWriter::write_line(const json& j) {
    out_ << j.dump() << "\n";
    if (!out_) throw journal_error("journal write failed: " + path_);
}

void JournalWriter::write_question(const Question& q, const WrongAnswerPool& pool) {
    write_line(question_to_json(q, pool));
}

void JournalWriter::write_turn(const TurnRecord& t) { write_line(to_json(t)); }

void JournalWriter::trajectory_complete(const std::string& question_id) {
    write_line(json{{"type", "trajectory_complete"}, {"question_id", question_id}});
    out_.flush();
}

void JournalWriter::trajectory_restart(const std::string& question_id) {
    write_line(json{{"type", "trajectory_restart"}, {"question_id", question_id}});
}

void JournalWriter::flush() { out_.flush(); }

const Question* JournalContents::find_question(const std::string& id) const {
    for (const auto& q : questions)
        if (q.id == id) return &q;
    return nullptr;
}

std::vector<const TurnRecord*> JournalContents::final_turns(const std::string& id) const {
    // A restart invalidates every turn of the question seen so far; only
    // the last uninterrupted block survives.
    std::vector<const TurnRecord*> out;
    if (completed.find(id) == completed.end()) return out;
    for (const auto& t : turns) {
        if (t.question_id != id) continue;
        if (t.round == 0) out.clear();
        out.push_back(&t);
    }
    return out;
}

JournalContents read_journal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw journal_error("cannot open journal: " + path);
    JournalContents contents;
    std::string line;
    bool have_header = false;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw journal_error("corrupt journal line " + std::to_string(line_no) +
                                " in " + path + ": " + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "run_header") {
            contents.header = run_header_from_json(j);
            have_header = true;
        } else if (type == "question") {
            Question q;
            q.id = j.at("id").get<std::string>();
            auto kind = corpus_kind_from_string(j.at("corpus").get<std::string>());
            if (!kind) throw journal_error("unknown corpus in journal: " + path);
            q.corpus = *kind;
            q.prompt = j.at("prompt").get<std::string>();
            for (const auto& c : j.at("choices"))
                q.choices.emplace_back(c.at("letter").get<std::string>().at(0),
                                       c.at("text").get<std::string>());
            q.gold = answer_key_from_json(j.at("gold"));
            q.domain_tag = j.value("domain", "");
            q.format = !q.choices.empty() ? QuestionFormat::mcq
                       : q.gold.kind == AnswerKind::number ? QuestionFormat::numeric
                                                           : QuestionFormat::free_span;
            WrongAnswerPool pool;
            pool.question_id = q.id;
            auto rehydrate = [&](const std::string& display) {
                if (q.format == QuestionFormat::mcq)
                    return AnswerKey::of_letter(display.at(0));
                if (q.format == QuestionFormat::numeric)
                    return AnswerKey::of_number(display);
                return AnswerKey::of_span(display);
            };
            pool.wrong1 = rehydrate(j.at("wrong1").get<std::string>());
            pool.wrong2 = rehydrate(j.at("wrong2").get<std::string>());
            contents.pools[q.id] = pool;
            contents.questions.push_back(std::move(q));
        } else if (type == "turn") {
            contents.turns.push_back(turn_record_from_json(j));
        } else if (type == "trajectory_complete") {
            contents.completed.insert(j.at("question_id").get<std::string>());
        } else if (type == "trajectory_restart") {
            contents.restarts[j.at("question_id").get<std::string>()] += 1;
        } else {
            throw journal_error("unknown record type '" + type + "' in " + path);
        }
    }
    if (!have_header) throw journal_error("journal lacks a run header: " + path);
    return contents;
}

std::string journal_filename(const std::string& out_dir, const RunHeader& h) {
    std::string name = h.model + "_" + h.corpus_name + "_" + digest_hex(h.digest) + ".jsonl";
    for (auto& c : name)
        if (c == '/' || c == ' ' || c == ':') c = '-';
    if (out_dir.empty()) return name;
    return out_dir + "/" + name;
}

}  // namespace uceval
