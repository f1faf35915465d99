#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "uceval/corpus.hpp"
#include "uceval/journal.hpp"
#include "uceval/model_client.hpp"
#include "uceval/sim_backend.hpp"

namespace uceval {

struct Seeds {
    uint64_t attack_order = 0;
    uint64_t decoding = 0;
    uint64_t sampling = 0;
};

struct RunConfig {
    std::string corpus_path;
    CorpusKind corpus = CorpusKind::mt_cons;
    std::string corpus_name;  // defaults to the enum spelling
    std::string mode = "think";
    BackendConfig model;
    BackendConfig judge;
    SimProfile sim;  // consulted when model.kind == simulated
    Seeds seeds;
    int limit = 0;  // 0 = whole corpus
    int concurrency = 1;
    std::string out_dir = "out";
    bool carry_traces = false;
    int probe_cap_per_state = 200;
    bool defense_first_flip_only = false;
    ScriptedJudgeProfile audit_judge;  // independent judge for `audit`
};

// Key-value config with one [table] per backend, a deliberately small TOML
// subset: tables, `key = value`, strings in double quotes, ints, floats,
// booleans, # comments. Unknown keys are errors so typos cannot silently
// change a run.
RunConfig load_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Raw layer under the typed loader; exposed for the CLI's --set overrides.
using ConfigTables = std::map<std::string, std::map<std::string, std::string>>;
ConfigTables parse_toml_subset(const std::string& text);
RunConfig config_from_tables(const ConfigTables& tables);

// Canonical one-line-per-key rendering: every field, sorted, locale-free.
// Its fnv1a64 hash names journals and guards resume.
std::string canonical_config_string(const RunConfig& cfg);
uint64_t config_digest(const RunConfig& cfg);

RunHeader make_run_header(const RunConfig& cfg);

}  // namespace uceval
