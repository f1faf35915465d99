#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "uceval/corpus.hpp"
#include "uceval/model_client.hpp"

namespace uceval {

inline constexpr int journal_version = 1;

struct RunHeader {
    uint64_t digest = 0;  // fnv1a64 of the canonical config string
    uint64_t seed = 0;
    std::string model;
    std::string corpus_name;
    BackendKind backend = BackendKind::simulated;
    Surface surface = Surface::think_toggle_on;
    std::string mode;  // free-form condition label, e.g. "think" / "no_think"
    int rounds = 9;
};

nlohmann::json to_json(const RunHeader& h);
RunHeader run_header_from_json(const nlohmann::json& j);

// One graded dialogue turn. latent: 1 trace concludes gold, 0 concludes
// something else, -1 no commitment. trace_value/emitted hold display forms
// (a letter for mcq, the normalized number or span otherwise).
struct TurnRecord {
    std::string question_id;
    int round = 0;
    int attack_id = -1;  // -1 at round 0
    std::string user_msg;
    std::string raw;
    std::string trace;
    std::string answer_text;
    std::string emitted;
    bool behavioral = false;
    int latent = -1;
    std::string trace_value;
    std::string state;  // "FC" | "UC" | "FI" | "UI" | "NO_COMMIT"
    int64_t wall_time_ms = 0;
    Usage usage;
};

nlohmann::json to_json(const TurnRecord& t);
TurnRecord turn_record_from_json(const nlohmann::json& j);

// Append-only line-delimited JSON log. A fresh file starts with the header
// line; reopening an existing file verifies the stored digest and refuses to
// append under a different configuration.
class JournalWriter {
public:
    JournalWriter(const std::string& path, const RunHeader& header);

    void write_question(const Question& q, const WrongAnswerPool& pool);
    void write_turn(const TurnRecord& t);
    void trajectory_complete(const std::string& question_id);
    void trajectory_restart(const std::string& question_id);
    void flush();

    const std::string& path() const { return path_; }

private:
    void write_line(const nlohmann::json& j);

    std::string path_;
    std::ofstream out_;
};

struct JournalContents {
    RunHeader header;
    std::vector<Question> questions;  // first-seen order
    std::map<std::string, WrongAnswerPool> pools;
    std::vector<TurnRecord> turns;  // every turn line, replays included
    std::set<std::string> completed;
    std::map<std::string, int> restarts;

    const Question* find_question(const std::string& id) const;
    // Turns belonging to the final (surviving) attempt of a completed
    // trajectory, in round order.
    std::vector<const TurnRecord*> final_turns(const std::string& id) const;
};

JournalContents read_journal(const std::string& path);

// Journal filenames carry the config digest so concurrent configurations
// cannot interleave: <model>_<corpus>_<digest16hex>.jsonl
std::string journal_filename(const std::string& out_dir, const RunHeader& h);

}  // namespace uceval
