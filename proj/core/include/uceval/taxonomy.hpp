#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uceval/journal.hpp"

namespace uceval {

enum class CellState { FC, UC, FI, UI, NO_COMMIT };

std::string to_string(CellState s);
CellState cell_state_from_string(const std::string& s);

// 2x2 join of (latent, behavioral); latent -1 (no committed trace) wins.
CellState classify_cell(int b, int latent);

// Flat per-cell record as written to the cell CSV.
struct CellRecord {
    std::string model_id;
    std::string corpus;
    std::string question_id;
    int round = 0;
    int attack_id = -1;
    int b = 0;
    int latent = -1;  // 1 | 0 | -1 = ⊥
    std::string trace_letter;  // display form; "N" when ⊥
    std::string emitted_letter;
    CellState state = CellState::NO_COMMIT;
};

// Journal turns -> cell records, stably sorted by (corpus, model,
// question_id, round). Only completed trajectories contribute.
std::vector<CellRecord> cells_from_journal(const JournalContents& journal);

struct FirstFlip {
    std::string question_id;
    int flip_round = 0;  // 1..8
    int latent_at_r = -1;
    int attack_id_at_r = -1;
};

// Cells must cover rounds 0..8 of one question. Empty when the question is
// wrong at round 0 or never goes wrong afterwards.
std::optional<FirstFlip> first_flip(const std::vector<CellRecord>& question_cells);

struct LaffDataset {
    std::vector<FirstFlip> flips;
    int n_committed = 0;       // flips with a committed trace
    int k_latent_correct = 0;  // of those, trace still concludes gold
    int abstain_at_flip = 0;   // ⊥ at the flip, outside the denominator
    int r0_correct = 0;
    int questions = 0;
    double flip_rate = 0.0;  // flipped / R0-correct
    double r0_accuracy = 0.0;
};

// A question counts as flipped when any round after R0 is wrong; recovering
// later does not un-count it.
LaffDataset laff_dataset(const std::vector<CellRecord>& cells);

}  // namespace uceval
