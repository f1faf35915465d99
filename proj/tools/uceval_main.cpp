#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uceval/audit.hpp"
#include "uceval/config.hpp"
#include "uceval/defense.hpp"
#include "uceval/driver.hpp"
#include "uceval/errors.hpp"
#include "uceval/probe.hpp"
#include "uceval/report.hpp"
#include "uceval/sim_backend.hpp"
#include "uceval/stats.hpp"

namespace fs = std::filesystem;
using namespace uceval;

namespace {

struct Overrides {
    std::string config_path;
    std::string corpus_path;
    std::string mode;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int limit = -1;
    int concurrency = 0;
    bool resume = false;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
    if (!ov.corpus_path.empty()) cfg.corpus_path = ov.corpus_path;
    if (!ov.mode.empty()) cfg.mode = ov.mode;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.seed_set) {
        cfg.seeds.attack_order = ov.seed;
        cfg.sim.seed = ov.seed;
    }
    if (ov.limit >= 0) cfg.limit = ov.limit;
    if (ov.concurrency > 0) cfg.concurrency = ov.concurrency;
}

std::unique_ptr<ChatBackend> make_model_backend(const RunConfig& cfg) {
    if (cfg.model.kind == BackendKind::simulated)
        return make_sim_backend(cfg.model, cfg.sim);
    return make_http_backend(cfg.model);
}

std::unique_ptr<ChatBackend> make_judge_backend(const RunConfig& cfg) {
    if (cfg.judge.kind == BackendKind::simulated)
        return make_scripted_judge(ScriptedJudgeProfile{});
    return make_http_backend(cfg.judge);
}

std::vector<Question> load_questions(const RunConfig& cfg) {
    if (!cfg.corpus_path.empty())
        return load_corpus(cfg.corpus_path, cfg.corpus, cfg.limit);
    if (cfg.model.kind != BackendKind::simulated)
        throw config_error("corpus_path is required unless the model backend "
                           "is simulated");
    return synthetic_corpus(cfg.limit > 0 ? cfg.limit : 700, cfg.seeds.sampling);
}

std::map<std::string, WrongAnswerPool> build_pools(
    const RunConfig& cfg, const std::vector<Question>& questions) {
    std::map<std::string, WrongAnswerPool> pools;
    if (cfg.corpus == CorpusKind::nonmcq && !cfg.corpus_path.empty()) {
        // Pools for the derived free-span corpus come from the mcq originals.
        auto originals = load_corpus(cfg.corpus_path, CorpusKind::mt_cons, cfg.limit);
        std::map<std::string, const Question*> by_id;
        for (const auto& q : originals) by_id[q.id] = &q;
        for (const auto& q : questions) {
            const Question* original = by_id.at(q.id);
            pools[q.id] = nonmcq_pool(
                *original,
                build_wrong_answer_pool(*original, originals, cfg.seeds.sampling));
        }
        return pools;
    }
    for (const auto& q : questions)
        pools[q.id] = build_wrong_answer_pool(q, questions, cfg.seeds.sampling);
    return pools;
}

void require_matching_digest(const RunConfig& cfg, const JournalContents& journal) {
    if (cfg.model.kind != BackendKind::simulated) return;
    if (journal.header.digest != config_digest(cfg))
        throw config_error(
            "journal was produced under a different configuration; the "
            "scripted backend cannot replay it");
}

int do_run(RunConfig cfg, bool resume) {
    auto questions = load_questions(cfg);
    auto pools = build_pools(cfg, questions);
    auto model = make_model_backend(cfg);
    auto judge = make_judge_backend(cfg);

    RunHeader header = make_run_header(cfg);
    fs::create_directories(cfg.out_dir);
    std::string path = journal_filename(cfg.out_dir, header);

    std::set<std::string> done;
    if (fs::exists(path) && fs::file_size(path) > 0) {
        if (!resume)
            throw config_error("journal " + path +
                               " already exists; pass --resume or choose a "
                               "fresh --out directory");
        JournalContents contents = read_journal(path);
        ResumePlan plan = plan_resume(contents, questions);
        done = plan.completed;
        std::cout << "resume: " << plan.completed.size() << " complete, "
                  << plan.restart.size() << " restarting, " << plan.fresh.size()
                  << " fresh\n";
    }

    JournalWriter writer(path, header);
    DriverOptions opt;
    opt.carry_traces = cfg.carry_traces;
    opt.concurrency = cfg.concurrency;
    RunStats stats = run_questions(*model, *judge, questions, pools, writer,
                                   cfg.seeds.attack_order, opt, done);
    std::cout << "run: " << path << " (" << stats.completed << " completed, "
              << stats.skipped << " skipped, " << stats.failed << " failed)\n";
    return stats.failed == 0 ? 0 : 1;
}

int do_analyze(const std::string& input, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<CellRecord> cells;
    std::vector<std::string> written;
    if (input.size() >= 6 && input.substr(input.size() - 6) == ".jsonl") {
        cells = cells_from_journal(read_journal(input));
        std::string cell_path = out_dir + "/cells.csv";
        emit_cell_csv(cells, cell_path);
        written.push_back(cell_path);
    } else {
        cells = read_cell_csv(input);
    }
    Analysis analysis = analyze_cells(cells);
    for (const auto& f : emit_plot_data(analysis, out_dir)) written.push_back(f);

    std::cout << analysis_summary(analysis);
    std::cout << "analyze: " << cells.size() << " cells";
    for (const auto& f : written) std::cout << ", wrote " << f;
    std::cout << "\n";
    return 0;
}

int do_audit(const RunConfig& cfg, const std::vector<std::string>& journal_paths,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<JournalContents> journals;
    journals.reserve(journal_paths.size());
    std::vector<CellRecord> cells;
    for (const auto& p : journal_paths) {
        journals.push_back(read_journal(p));
        auto some = cells_from_journal(journals.back());
        cells.insert(cells.end(), some.begin(), some.end());
    }
    std::vector<const JournalContents*> refs;
    for (const auto& j : journals) refs.push_back(&j);

    AuditSample sample = sample_audit_cells(cells, cfg.seeds.sampling);
    auto independent = make_scripted_judge(cfg.audit_judge);
    auto records = run_audit(refs, sample, *independent);
    AuditBreakdown breakdown = audit_breakdown(records);

    std::string path = out_dir + "/audit.csv";
    emit_audit_csv(records, path);

    for (const auto& row : breakdown.rows) {
        char line[160];
        std::snprintf(line, sizeof line,
                      "%s/%s: n=%d agree=%.1f%% abstain=%.1f%% diff=%.1f%%",
                      row.dataset.c_str(), row.state.c_str(), row.n,
                      row.agree_pct, row.abstain_pct, row.diff_pct);
        std::cout << line << "\n";
    }
    for (const auto& [stratum, missing] : sample.shortfalls)
        std::cout << "short stratum " << stratum << ": " << missing
                  << " below target\n";
    const AuditRow& uc = breakdown.pooled_uc;
    char line[160];
    std::snprintf(line, sizeof line,
                  "audit: pooled UC n=%d agree=%.1f%% abstain=%.1f%% "
                  "diff=%.1f%%, wrote %s",
                  uc.n, uc.agree_pct, uc.abstain_pct, uc.diff_pct, path.c_str());
    std::cout << line << "\n";
    return 0;
}

int do_probe(const RunConfig& cfg, const std::string& journal_path,
             const std::string& out_dir) {
    fs::create_directories(out_dir);
    JournalContents journal = read_journal(journal_path);
    require_matching_digest(cfg, journal);
    auto backend = make_model_backend(cfg);

    ProbeCaps caps;
    caps.per_state = cfg.probe_cap_per_state;
    caps.seed = cfg.seeds.sampling;
    std::vector<PrefixVariant> variants = {
        PrefixVariant::plain, PrefixVariant::templated, PrefixVariant::bare,
        PrefixVariant::natural};
    auto records = run_probe(*backend, journal, variants, caps);
    ProbeReport report = probe_report(records);

    std::string path = out_dir + "/probe.csv";
    emit_probe_csv(records, path);

    for (const auto& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%s/%s: n=%d mean_p=%.4f argmax=%.1f%%",
                      to_string(row.state).c_str(), to_string(row.variant).c_str(),
                      row.n, row.mean_p_correct, row.argmax_correct_pct);
        std::cout << line << "\n";
    }
    char summary[160];
    std::snprintf(summary, sizeof summary,
                  "probe: %zu records, UC argmax range [%.1f%%, %.1f%%], wrote %s",
                  records.size(), report.uc_argmax_lo, report.uc_argmax_hi,
                  path.c_str());
    std::cout << summary << "\n";
    return 0;
}

int do_defend(const RunConfig& cfg, const std::string& journal_path,
              const std::string& out_dir) {
    fs::create_directories(out_dir);
    JournalContents journal = read_journal(journal_path);
    require_matching_digest(cfg, journal);
    auto model = make_model_backend(cfg);
    auto judge = make_judge_backend(cfg);

    DefenseOptions opt;
    opt.first_flip_only = cfg.defense_first_flip_only;
    DefenseResult result = run_defense(*model, *judge, journal, opt);
    DefenseReport report = defense_report(journal, result);

    std::string path = out_dir + "/defense.csv";
    emit_defense_csv(result.outcomes, path);

    char line[256];
    std::snprintf(line, sizeof line,
                  "defend: fired=%d corrections=%d (%.1f%%) harms=%d (%.1f%%) "
                  "delta_acc=%+.1fpp delta_flip=%+.1fpp, wrote %s",
                  report.fired, result.corrections, report.corr_pct,
                  result.harms, report.harm_pct, report.delta_acc_pp,
                  report.delta_flip_pp, path.c_str());
    std::cout << line << "\n";
    return 0;
}

const std::map<std::string, SimProfile>& sim_presets() {
    static const std::map<std::string, SimProfile> presets = {
        {"uc50", {0.9, 0.05, 0.50, 0.0, 0.0, 0}},
        {"uc13", {0.9, 0.05, 0.13, 0.0, 0.0, 0}},
        {"defense0", {0.9, 0.05, 0.50, 0.0, 0.0, 0}},
        {"defense08", {0.9, 0.05, 0.00, 0.0, 0.8, 0}},
    };
    return presets;
}

RunConfig sim_config(const std::string& profile_name, const Overrides& ov) {
    auto it = sim_presets().find(profile_name);
    if (it == sim_presets().end())
        throw config_error("unknown sim profile: " + profile_name);

    RunConfig cfg;
    cfg.model.kind = BackendKind::simulated;
    cfg.model.model_name = "sim-" + profile_name;
    cfg.judge.kind = BackendKind::simulated;
    cfg.sim = it->second;
    apply_overrides(cfg, ov);
    if (!ov.mode.empty()) {
        if (ov.mode == "think") cfg.model.surface = Surface::think_toggle_on;
        else if (ov.mode == "no_think") cfg.model.surface = Surface::think_toggle_off;
        else cfg.model.surface = surface_from_string(ov.mode);
    }
    cfg.sim.seed = cfg.seeds.attack_order;
    if (cfg.corpus_name.empty()) cfg.corpus_name = to_string(cfg.corpus);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"9-round pushback harness: run, analyze, audit, probe, defend"};
    app.require_subcommand(1);

    Overrides ov;
    std::string analyze_input;
    std::vector<std::string> audit_journals;
    std::string probe_journal;
    std::string defend_journal;
    std::string sim_profile = "uc50";

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config)
            cmd->add_option("--config", ov.config_path, "TOML-style run config")
                ->required();
        cmd->add_option("--seed", ov.seed, "attack-order seed override")
            ->each([&](const std::string&) { ov.seed_set = true; });
        cmd->add_option("--corpus", ov.corpus_path, "corpus file override");
        cmd->add_option("--mode", ov.mode, "condition label override");
        cmd->add_option("--out", ov.out_dir, "output directory override");
        cmd->add_option("--limit", ov.limit, "question-count limit override");
        cmd->add_option("--concurrency", ov.concurrency,
                        "parallel trajectories override");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "execute a configured run");
    add_common(run_cmd, true);
    run_cmd->add_flag("--resume", ov.resume, "continue an existing journal");

    CLI::App* resume_cmd =
        app.add_subcommand("resume", "continue an interrupted run");
    add_common(resume_cmd, true);

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "journal or cell CSV -> tables");
    analyze_cmd->add_option("input", analyze_input, "journal .jsonl or cell .csv")
        ->required();
    analyze_cmd->add_option("--out", ov.out_dir, "output directory");

    CLI::App* audit_cmd =
        app.add_subcommand("audit", "replay sampled traces through an "
                           "independent judge");
    add_common(audit_cmd, true);
    audit_cmd->add_option("journals", audit_journals, "journal files")
        ->required();

    CLI::App* probe_cmd =
        app.add_subcommand("probe", "answer-slot distribution probe");
    add_common(probe_cmd, true);
    probe_cmd->add_option("journal", probe_journal, "journal file")->required();

    CLI::App* defend_cmd =
        app.add_subcommand("defend", "trace-anchored reconciliation pass");
    add_common(defend_cmd, true);
    defend_cmd->add_option("journal", defend_journal, "journal file")->required();

    CLI::App* sim_cmd =
        app.add_subcommand("sim", "scripted run without a config file");
    add_common(sim_cmd, false);
    sim_cmd->add_option("--profile", sim_profile,
                        "preset: uc50, uc13, defense0, defense08");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*analyze_cmd) {
            return do_analyze(analyze_input,
                              ov.out_dir.empty() ? "out" : ov.out_dir);
        }
        if (*sim_cmd) return do_run(sim_config(sim_profile, ov), false);

        RunConfig cfg = load_config_file(ov.config_path);
        apply_overrides(cfg, ov);
        if (*run_cmd) return do_run(cfg, ov.resume);
        if (*resume_cmd) return do_run(cfg, true);
        if (*audit_cmd) return do_audit(cfg, audit_journals, cfg.out_dir);
        if (*probe_cmd) return do_probe(cfg, probe_journal, cfg.out_dir);
        if (*defend_cmd) return do_defend(cfg, defend_journal, cfg.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
