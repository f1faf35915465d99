#include "uceval/audit.hpp"

#include <algorithm>
#include <fstream>

#include "uceval/errors.hpp"
#include "uceval/rng.hpp"
#include "uceval/stats.hpp"

namespace uceval {

std::string to_string(Agreement a) {
    switch (a) {
        case Agreement::agree: return "agree";
        case Agreement::abstain: return "abstain";
        case Agreement::diff: return "diff";
    }
    return "agree";
}

Agreement categorize_agreement(char inhouse, char independent) {
    if (independent == 'N') return Agreement::abstain;
    return inhouse == independent ? Agreement::agree : Agreement::diff;
}

AuditSample sample_audit_cells(const std::vector<CellRecord>& cells, uint64_t seed) {
    struct Stratum {
        CellState state;
        int quota;
    };
    static const Stratum strata[] = {
        {CellState::UC, 50}, {CellState::FC, 50}, {CellState::UI, 30}};

    std::vector<std::string> datasets;
    for (const auto& c : cells)
        if (std::find(datasets.begin(), datasets.end(), c.corpus) == datasets.end())
            datasets.push_back(c.corpus);
    std::sort(datasets.begin(), datasets.end());

    AuditSample sample;
    for (const auto& dataset : datasets) {
        for (const auto& stratum : strata) {
            std::vector<CellRecord> eligible;
            for (const auto& c : cells) {
                if (c.corpus != dataset || c.state != stratum.state) continue;
                // The replay protocol is letter-based.
                if (c.trace_letter.size() != 1 || c.trace_letter[0] < 'A' ||
                    c.trace_letter[0] > 'J')
                    continue;
                eligible.push_back(c);
            }
            auto rng = stream_for(seed, dataset + "/" + to_string(stratum.state),
                                  "audit_sample");
            seeded_shuffle(eligible, rng);
            int take = std::min<int>(stratum.quota, static_cast<int>(eligible.size()));
            for (int i = 0; i < take; ++i) sample.cells.push_back(eligible[static_cast<size_t>(i)]);
            if (take < stratum.quota)
                sample.shortfalls[dataset + "/" + to_string(stratum.state)] =
                    stratum.quota - take;
        }
    }
    return sample;
}

std::vector<AuditRecord> run_audit(
    const std::vector<const JournalContents*>& journals,
    const AuditSample& sample, ChatBackend& independent_judge) {
    std::vector<AuditRecord> records;
    for (const auto& cell : sample.cells) {
        const JournalContents* journal = nullptr;
        for (const JournalContents* j : journals)
            if (j->header.corpus_name == cell.corpus) journal = j;
        if (journal == nullptr)
            throw journal_error("audit sample references corpus without a journal: " +
                                cell.corpus);
        const Question* q = journal->find_question(cell.question_id);
        if (q == nullptr)
            throw journal_error("audit cell references unknown question: " +
                                cell.question_id);
        const TurnRecord* turn = nullptr;
        for (const TurnRecord* t : journal->final_turns(cell.question_id))
            if (t->round == cell.round) turn = t;
        if (turn == nullptr)
            throw journal_error("audit cell has no journaled turn: " +
                                cell.question_id + ":" + std::to_string(cell.round));

        TraceVerdict verdict =
            judge_trace_letter(turn->trace, q->valid_letters(), independent_judge);

        AuditRecord rec;
        rec.dataset = cell.corpus;
        rec.state = cell.state;
        rec.cell_id = cell.question_id + ":" + std::to_string(cell.round);
        rec.inhouse = cell.trace_letter[0];
        rec.independent = verdict.committed ? verdict.letter : 'N';
        rec.gold = q->gold.letter;
        rec.category = categorize_agreement(rec.inhouse, rec.independent);
        rec.inhouse_matches_gold = rec.inhouse == rec.gold;
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

void finish_row(AuditRow& row) {
    if (row.n == 0) return;
    row.agree_pct = 100.0 * row.agree / row.n;
    row.abstain_pct = 100.0 * row.abstain / row.n;
    row.diff_pct = 100.0 * row.diff / row.n;
}

}  // namespace

AuditBreakdown audit_breakdown(const std::vector<AuditRecord>& records) {
    std::map<std::pair<std::string, std::string>, AuditRow> rows;
    AuditBreakdown out;
    out.pooled_uc.dataset = "pooled";
    out.pooled_uc.state = "UC";

    for (const auto& rec : records) {
        auto key = std::make_pair(rec.dataset, to_string(rec.state));
        AuditRow& row = rows[key];
        row.dataset = rec.dataset;
        row.state = to_string(rec.state);
        ++row.n;
        if (rec.category == Agreement::agree) ++row.agree;
        else if (rec.category == Agreement::abstain) ++row.abstain;
        else ++row.diff;
        if (rec.category == Agreement::diff && rec.inhouse_matches_gold)
            ++row.diff_inhouse_gold;

        if (rec.state == CellState::UC) {
            AuditRow& pooled = out.pooled_uc;
            ++pooled.n;
            if (rec.category == Agreement::agree) ++pooled.agree;
            else if (rec.category == Agreement::abstain) ++pooled.abstain;
            else ++pooled.diff;
            if (rec.category == Agreement::diff && rec.inhouse_matches_gold)
                ++pooled.diff_inhouse_gold;
        }
    }
    for (auto& [key, row] : rows) {
        finish_row(row);
        out.rows.push_back(row);
    }
    finish_row(out.pooled_uc);
    return out;
}

std::size_t emit_audit_csv(const std::vector<AuditRecord>& records,
                           const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw journal_error("cannot write audit csv: " + path);
    out << "dataset,state,cell_id,inhouse,independent,gold,category\n";
    for (const auto& rec : records) {
        out << rec.dataset << ',' << to_string(rec.state) << ',' << rec.cell_id
            << ',' << rec.inhouse << ',' << rec.independent << ',' << rec.gold
            << ',' << to_string(rec.category) << '\n';
    }
    if (!out) throw journal_error("audit csv write failed: " + path);
    return records.size();
}

}  // namespace uceval
