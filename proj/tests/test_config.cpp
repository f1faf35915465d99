#include "doctest.h"

#include <sstream>

#include "uceval/config.hpp"
#include "uceval/errors.hpp"

using namespace uceval;

namespace {

const char* full_config = R"(
# run identity
corpus = "mt_cons"
corpus_path = "data/mt_cons.jsonl"
mode = "think"
limit = 200
concurrency = 4
out_dir = "results"
carry_traces = false

[model]
kind = "simulated"
model_name = "sim-uc50"
surface = "think_toggle_on"
temperature = 0.0
max_tokens = 2048

[judge]
kind = "simulated"
model_name = "scripted-judge"

[seeds]
attack_order = 42
decoding = 7
sampling = 11

[sim]
p0_correct = 0.9
flip_hazard = 0.05
uc_given_flip = 0.5

[probe]
per_state = 150

[defense]
first_flip_only = true

[audit]
agree = 0.86
abstain = 0.13
diff = 0.01
seed = 3
)";

}  // namespace

TEST_CASE("a full config file parses into typed fields") {
    RunConfig cfg = parse_config_text(full_config);
    CHECK(cfg.corpus == CorpusKind::mt_cons);
    CHECK(cfg.corpus_path == "data/mt_cons.jsonl");
    CHECK(cfg.corpus_name == "mt_cons");  // defaulted from the corpus
    CHECK(cfg.mode == "think");
    CHECK(cfg.limit == 200);
    CHECK(cfg.concurrency == 4);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.model.kind == BackendKind::simulated);
    CHECK(cfg.model.model_name == "sim-uc50");
    CHECK(cfg.model.surface == Surface::think_toggle_on);
    CHECK(cfg.judge.model_name == "scripted-judge");
    CHECK(cfg.seeds.attack_order == 42);
    CHECK(cfg.seeds.decoding == 7);
    CHECK(cfg.seeds.sampling == 11);
    CHECK(cfg.sim.p0_correct == doctest::Approx(0.9));
    CHECK(cfg.sim.flip_hazard == doctest::Approx(0.05));
    CHECK(cfg.sim.uc_given_flip == doctest::Approx(0.5));
    CHECK(cfg.sim.seed == 42);  // follows the attack seed unless set
    CHECK(cfg.probe_cap_per_state == 150);
    CHECK(cfg.defense_first_flip_only);
    CHECK(cfg.audit_judge.agree == doctest::Approx(0.86));
    CHECK(cfg.audit_judge.abstain == doctest::Approx(0.13));
    CHECK(cfg.audit_judge.diff == doctest::Approx(0.01));
    CHECK(cfg.audit_judge.seed == 3);
}

TEST_CASE("an explicit sim seed decouples from the attack seed") {
    RunConfig cfg = parse_config_text("[seeds]\nattack_order = 42\n[sim]\nseed = 9\n");
    CHECK(cfg.sim.seed == 9);
    CHECK(cfg.seeds.attack_order == 42);
}

TEST_CASE("comments and quoted hashes parse correctly") {
    ConfigTables tables = parse_toml_subset(
        "key = \"value # not a comment\"  # a real comment\n"
        "# full-line comment\n"
        "other = 3\n");
    CHECK(tables.at("").at("key") == "value # not a comment");
    CHECK(tables.at("").at("other") == "3");
}

TEST_CASE("malformed lines are rejected with their line number") {
    CHECK_THROWS_WITH_AS(parse_toml_subset("key value\n"),
                         "expected key = value at line 1", config_error);
    CHECK_THROWS_WITH_AS(parse_toml_subset("a = 1\n[broken\n"),
                         "bad table header at line 2", config_error);
    CHECK_THROWS_AS(parse_toml_subset("a = 1\na = 2\n"), config_error);
    CHECK_THROWS_AS(parse_toml_subset("= 1\n"), config_error);
    CHECK_THROWS_AS(parse_toml_subset("a =\n"), config_error);
    CHECK_THROWS_AS(parse_toml_subset("[]\n"), config_error);
}

TEST_CASE("unknown keys and tables are errors, not warnings") {
    CHECK_THROWS_AS(parse_config_text("typo_key = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[model]\ntypo = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[seeds]\ntypo = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[sim]\ntypo = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[unknown_table]\na = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[audit]\ntypo = 1\n"), config_error);
}

TEST_CASE("bad values are rejected by type") {
    CHECK_THROWS_AS(parse_config_text("limit = soon\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("carry_traces = yes\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[sim]\np0_correct = high\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[sim]\np0_correct = 1.5\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[sim]\nflip_hazard = -0.1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("corpus = \"unknown\"\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[model]\nsurface = \"telepathy\"\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("[model]\nkind = \"carrier_pigeon\"\n"), config_error);
}

TEST_CASE("the digest covers experiment identity only") {
    RunConfig base = parse_config_text(full_config);
    uint64_t digest = config_digest(base);

    // Execution knobs do not fork the digest.
    RunConfig more_workers = base;
    more_workers.concurrency = 32;
    more_workers.out_dir = "elsewhere";
    more_workers.probe_cap_per_state = 10;
    more_workers.defense_first_flip_only = false;
    more_workers.audit_judge.agree = 0.5;
    CHECK(config_digest(more_workers) == digest);

    // Identity fields do.
    RunConfig other_seed = base;
    other_seed.seeds.attack_order = 43;
    CHECK(config_digest(other_seed) != digest);

    RunConfig other_profile = base;
    other_profile.sim.uc_given_flip = 0.13;
    CHECK(config_digest(other_profile) != digest);

    RunConfig other_mode = base;
    other_mode.mode = "no_think";
    CHECK(config_digest(other_mode) != digest);

    RunConfig other_model = base;
    other_model.model.model_name = "sim-other";
    CHECK(config_digest(other_model) != digest);

    // Stable across reparses of the same text.
    CHECK(config_digest(parse_config_text(full_config)) == digest);
}

TEST_CASE("the canonical string renders sorted key=value lines") {
    RunConfig cfg = parse_config_text(full_config);
    std::string canon = canonical_config_string(cfg);
    CHECK(canon.find("carry_traces=false\n") == 0);
    CHECK(canon.find("sim.uc_given_flip=0.5") != std::string::npos);
    CHECK(canon.find("concurrency") == std::string::npos);
    CHECK(canon.find("out_dir") == std::string::npos);
    // Lines arrive sorted.
    std::string prev;
    std::istringstream in(canon);
    std::string line;
    while (std::getline(in, line)) {
        CHECK(prev < line);
        prev = line;
    }
}

TEST_CASE("run headers inherit the digest and model identity") {
    RunConfig cfg = parse_config_text(full_config);
    RunHeader h = make_run_header(cfg);
    CHECK(h.digest == config_digest(cfg));
    CHECK(h.seed == 42);
    CHECK(h.model == "sim-uc50");
    CHECK(h.corpus_name == "mt_cons");
    CHECK(h.backend == BackendKind::simulated);
    CHECK(h.surface == Surface::think_toggle_on);
    CHECK(h.mode == "think");
    CHECK(h.rounds == 9);
}

TEST_CASE("missing config files fail loudly") {
    CHECK_THROWS_AS(load_config_file("/nonexistent/uceval.toml"), config_error);
}
