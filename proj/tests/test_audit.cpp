#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "uceval/audit.hpp"
#include "uceval/driver.hpp"
#include "uceval/errors.hpp"
#include "uceval/sim_backend.hpp"

using namespace uceval;

namespace {

CellRecord cell(const std::string& corpus, const std::string& qid, int round,
                CellState state, const std::string& trace_letter) {
    CellRecord c;
    c.model_id = "m";
    c.corpus = corpus;
    c.question_id = qid;
    c.round = round;
    c.b = (state == CellState::FC || state == CellState::FI) ? 1 : 0;
    c.latent = state == CellState::NO_COMMIT ? -1
               : (state == CellState::FC || state == CellState::UC) ? 1
                                                                    : 0;
    c.trace_letter = trace_letter;
    c.emitted_letter = "B";
    c.state = state;
    return c;
}

// A journaled scripted run whose cells mix FC, UC, and UI.
JournalContents scripted_journal(const std::string& path) {
    std::remove(path.c_str());
    auto corpus = synthetic_corpus(30, 5);
    std::map<std::string, WrongAnswerPool> pools;
    for (const auto& q : corpus) pools[q.id] = build_wrong_answer_pool(q, corpus, 5);

    SimProfile profile;
    profile.p0_correct = 1.0;
    profile.flip_hazard = 0.5;
    profile.uc_given_flip = 0.5;
    profile.seed = 5;
    BackendConfig cfg;
    cfg.kind = BackendKind::simulated;
    cfg.model_name = "sim-audit";
    cfg.surface = Surface::think_toggle_on;
    auto model = make_sim_backend(cfg, profile);
    auto judge = make_scripted_judge(ScriptedJudgeProfile{});

    RunHeader h;
    h.digest = 77;
    h.seed = 5;
    h.model = "sim-audit";
    h.corpus_name = "mt_cons";
    h.mode = "think";
    JournalWriter writer(path, h);
    run_questions(*model, *judge, corpus, pools, writer, 5, {});
    return read_journal(path);
}

}  // namespace

TEST_CASE("agreement categories compare letters with abstain first") {
    CHECK(categorize_agreement('B', 'B') == Agreement::agree);
    CHECK(categorize_agreement('B', 'N') == Agreement::abstain);
    CHECK(categorize_agreement('B', 'C') == Agreement::diff);
    CHECK(categorize_agreement('N', 'N') == Agreement::abstain);
}

TEST_CASE("audit sampling takes stratified quotas per dataset") {
    std::vector<CellRecord> cells;
    for (int i = 0; i < 120; ++i)
        cells.push_back(cell("mt_cons", "q-" + std::to_string(i), 1, CellState::UC, "B"));
    for (int i = 0; i < 80; ++i)
        cells.push_back(cell("mt_cons", "f-" + std::to_string(i), 0, CellState::FC, "B"));
    for (int i = 0; i < 10; ++i)
        cells.push_back(cell("mt_cons", "u-" + std::to_string(i), 2, CellState::UI, "C"));
    for (int i = 0; i < 60; ++i)
        cells.push_back(cell("mmlu_pro", "p-" + std::to_string(i), 1, CellState::UC, "A"));

    AuditSample sample = sample_audit_cells(cells, 17);
    int uc_mt = 0, fc_mt = 0, ui_mt = 0, uc_pro = 0;
    for (const auto& c : sample.cells) {
        if (c.corpus == "mt_cons" && c.state == CellState::UC) ++uc_mt;
        if (c.corpus == "mt_cons" && c.state == CellState::FC) ++fc_mt;
        if (c.corpus == "mt_cons" && c.state == CellState::UI) ++ui_mt;
        if (c.corpus == "mmlu_pro" && c.state == CellState::UC) ++uc_pro;
    }
    CHECK(uc_mt == 50);
    CHECK(fc_mt == 50);
    CHECK(ui_mt == 10);  // short stratum taken whole
    CHECK(uc_pro == 50);
    CHECK(sample.shortfalls.at("mt_cons/UI") == 20);
    CHECK(sample.shortfalls.count("mt_cons/UC") == 0);
    CHECK(sample.shortfalls.at("mmlu_pro/FC") == 50);

    AuditSample again = sample_audit_cells(cells, 17);
    REQUIRE(again.cells.size() == sample.cells.size());
    for (size_t i = 0; i < sample.cells.size(); ++i)
        CHECK(again.cells[i].question_id == sample.cells[i].question_id);

    AuditSample other = sample_audit_cells(cells, 18);
    bool differs = false;
    for (size_t i = 0; i < sample.cells.size(); ++i)
        if (other.cells[i].question_id != sample.cells[i].question_id) differs = true;
    CHECK(differs);
}

TEST_CASE("non-letter trace values are not replayable and are skipped") {
    std::vector<CellRecord> cells;
    cells.push_back(cell("gsm8k", "g-1", 1, CellState::UC, "33"));
    cells.push_back(cell("gsm8k", "g-2", 1, CellState::UC, "B"));
    AuditSample sample = sample_audit_cells(cells, 1);
    REQUIRE(sample.cells.size() == 1);
    CHECK(sample.cells[0].question_id == "g-2");
}

TEST_CASE("audit replays journaled traces through the independent judge") {
    JournalContents journal = scripted_journal("/tmp/uceval_audit_replay.jsonl");
    auto cells = cells_from_journal(journal);
    AuditSample sample = sample_audit_cells(cells, 9);
    REQUIRE(sample.cells.size() > 50);

    // A perfectly faithful independent judge reproduces every in-house call.
    auto faithful = make_scripted_judge(ScriptedJudgeProfile{});
    auto records = run_audit({&journal}, sample, *faithful);
    REQUIRE(records.size() == sample.cells.size());
    for (const auto& rec : records) {
        CHECK(rec.category == Agreement::agree);
        CHECK(rec.independent == rec.inhouse);
    }

    AuditBreakdown breakdown = audit_breakdown(records);
    CHECK(breakdown.pooled_uc.agree == breakdown.pooled_uc.n);
    CHECK(breakdown.pooled_uc.agree_pct == doctest::Approx(100.0));

    // An always-abstaining judge lands every cell in the abstain column.
    ScriptedJudgeProfile hollow;
    hollow.agree = 0.0;
    hollow.abstain = 1.0;
    auto abstainer = make_scripted_judge(hollow);
    auto held = run_audit({&journal}, sample, *abstainer);
    for (const auto& rec : held) CHECK(rec.category == Agreement::abstain);
}

TEST_CASE("audit refuses cells it cannot trace back to a journal") {
    JournalContents journal = scripted_journal("/tmp/uceval_audit_missing.jsonl");
    AuditSample sample;
    sample.cells.push_back(cell("mmlu_pro", "nope-1", 1, CellState::UC, "B"));
    auto judge = make_scripted_judge(ScriptedJudgeProfile{});
    CHECK_THROWS_AS(run_audit({&journal}, sample, *judge), journal_error);

    AuditSample unknown_question;
    unknown_question.cells.push_back(cell("mt_cons", "nope-2", 1, CellState::UC, "B"));
    CHECK_THROWS_AS(run_audit({&journal}, unknown_question, *judge), journal_error);
}

TEST_CASE("breakdown percentages follow the category counts") {
    std::vector<AuditRecord> records;
    auto add = [&](const std::string& dataset, CellState state, char inhouse,
                   char independent, char gold) {
        AuditRecord r;
        r.dataset = dataset;
        r.state = state;
        r.cell_id = "q:1";
        r.inhouse = inhouse;
        r.independent = independent;
        r.gold = gold;
        r.category = categorize_agreement(inhouse, independent);
        r.inhouse_matches_gold = inhouse == gold;
        records.push_back(r);
    };
    // 86 agree, 13 abstain, 1 diff across two datasets' UC strata.
    for (int i = 0; i < 50; ++i) add("mt_cons", CellState::UC, 'B', 'B', 'B');
    for (int i = 0; i < 36; ++i) add("mmlu_pro", CellState::UC, 'A', 'A', 'A');
    for (int i = 0; i < 13; ++i) add("mmlu_pro", CellState::UC, 'A', 'N', 'A');
    add("mmlu_pro", CellState::UC, 'A', 'C', 'A');
    // FC cells do not leak into the pooled UC row.
    for (int i = 0; i < 20; ++i) add("mt_cons", CellState::FC, 'B', 'B', 'B');

    AuditBreakdown b = audit_breakdown(records);
    CHECK(b.pooled_uc.n == 100);
    CHECK(b.pooled_uc.agree == 86);
    CHECK(b.pooled_uc.abstain == 13);
    CHECK(b.pooled_uc.diff == 1);
    CHECK(b.pooled_uc.agree_pct == doctest::Approx(86.0));
    CHECK(b.pooled_uc.abstain_pct == doctest::Approx(13.0));
    CHECK(b.pooled_uc.diff_pct == doctest::Approx(1.0));
    CHECK(b.pooled_uc.diff_inhouse_gold == 1);

    bool found_fc = false;
    for (const auto& row : b.rows)
        if (row.dataset == "mt_cons" && row.state == "FC") {
            found_fc = true;
            CHECK(row.n == 20);
            CHECK(row.agree_pct == doctest::Approx(100.0));
        }
    CHECK(found_fc);
}

TEST_CASE("audit csv lists one row per record under a fixed header") {
    std::vector<AuditRecord> records;
    AuditRecord r;
    r.dataset = "mt_cons";
    r.state = CellState::UC;
    r.cell_id = "q-7:3";
    r.inhouse = 'B';
    r.independent = 'N';
    r.gold = 'B';
    r.category = Agreement::abstain;
    records.push_back(r);

    std::string path = "/tmp/uceval_audit_csv_test.csv";
    std::remove(path.c_str());
    CHECK(emit_audit_csv(records, path) == 1);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "dataset,state,cell_id,inhouse,independent,gold,category");
    std::getline(in, line);
    CHECK(line == "mt_cons,UC,q-7:3,B,N,B,abstain");
}
