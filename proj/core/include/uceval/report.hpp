#pragma once

#include <string>
#include <vector>

#include "uceval/stats.hpp"
#include "uceval/taxonomy.hpp"

namespace uceval {

// Cell CSV columns, bit-exact:
// model,corpus,question_id,round,attack_id,behavioral,latent,trace_letter,emitted_letter,state
std::size_t emit_cell_csv(const std::vector<CellRecord>& cells,
                          const std::string& path);
std::vector<CellRecord> read_cell_csv(const std::string& path);

struct GroupAnalysis {
    std::string model;
    std::string corpus;
    LaffDataset laff;
    LaffEstimate estimate;
    PerRoundUc series;
    std::array<int, 5> state_counts{};  // FC, UC, FI, UI, NO_COMMIT over all cells
};

struct Analysis {
    std::vector<GroupAnalysis> groups;  // sorted by (corpus, model)
};

Analysis analyze_cells(const std::vector<CellRecord>& cells);

// Plot-ready files under out_dir: laff_bars.csv (one bar per group with k,
// n, point, CI and annotations) and uc_by_round.csv (8 rows per group).
// Returns the paths written. Every number is a pure function of the cell
// CSV, so re-running analyze on the CSV reproduces the files byte-for-byte.
std::vector<std::string> emit_plot_data(const Analysis& analysis,
                                        const std::string& out_dir);

// One line per group: LAFF k/n with CI, flip rate, abstains, R0 accuracy.
std::string analysis_summary(const Analysis& analysis);

// Fixed-precision, locale-free float rendering used by all emitted files.
std::string format_fraction(double value);

}  // namespace uceval
