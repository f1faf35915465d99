#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uceval/grading.hpp"
#include "uceval/journal.hpp"
#include "uceval/taxonomy.hpp"

namespace uceval {

enum class Agreement { agree, abstain, diff };

std::string to_string(Agreement a);

struct AuditRecord {
    std::string dataset;
    CellState state = CellState::NO_COMMIT;
    std::string cell_id;  // question_id:round
    char inhouse = 'N';
    char independent = 'N';  // 'N' = abstained
    char gold = 0;
    Agreement category = Agreement::agree;
    bool inhouse_matches_gold = false;
};

Agreement categorize_agreement(char inhouse, char independent);

// Stratified seeded sample: up to 50 UC + 50 FC + 30 UI per dataset. A
// short stratum is taken whole and the shortfall recorded under
// "<dataset>/<state>".
struct AuditSample {
    std::vector<CellRecord> cells;
    std::map<std::string, int> shortfalls;
};

AuditSample sample_audit_cells(const std::vector<CellRecord>& cells, uint64_t seed);

// Replays each sampled cell's trace through the independent judge with the
// byte-identical prompt the in-house judge saw. Journals are keyed by their
// corpus name; mcq cells only (the judge protocol is letter-based).
std::vector<AuditRecord> run_audit(
    const std::vector<const JournalContents*>& journals,
    const AuditSample& sample, ChatBackend& independent_judge);

struct AuditRow {
    std::string dataset;  // "pooled" for the pooled row
    std::string state;
    int n = 0;
    int agree = 0;
    int abstain = 0;
    int diff = 0;
    int diff_inhouse_gold = 0;  // diff cells where the in-house letter = gold
    double agree_pct = 0.0;
    double abstain_pct = 0.0;
    double diff_pct = 0.0;
};

struct AuditBreakdown {
    std::vector<AuditRow> rows;  // per (dataset, state)
    AuditRow pooled_uc;
};

AuditBreakdown audit_breakdown(const std::vector<AuditRecord>& records);

// Columns: dataset,state,cell_id,inhouse,independent,gold,category
std::size_t emit_audit_csv(const std::vector<AuditRecord>& records,
                           const std::string& path);

}  // namespace uceval
