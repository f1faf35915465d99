#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "uceval/taxonomy.hpp"

namespace uceval {

struct LaffEstimate {
    int k = 0;
    int n = 0;
    double point = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

// Wilson score interval, z = 1.96. Throws std::invalid_argument on n = 0.
std::pair<double, double> wilson_interval(int k, int n);
LaffEstimate laff_estimate(int k, int n);

struct FisherResult {
    std::array<int64_t, 4> table{};  // a, b, c, d
    double p_two_sided = 1.0;
};

// Exact two-sided Fisher test: sums hypergeometric point probabilities of
// all tables (with the observed margins) whose probability does not exceed
// the observed table's, with a 1e-7 relative slack against rounding. Uses
// log-factorials. Throws std::invalid_argument on an all-zero table.
FisherResult fisher_exact(int64_t a, int64_t b, int64_t c, int64_t d);

// UC-state fraction among committed round-r cells of R0-correct questions,
// r = 1..8.
struct PerRoundUc {
    std::array<int, 8> uc{};
    std::array<int, 8> committed{};
    std::array<double, 8> fraction{};
};

PerRoundUc per_round_uc(const std::vector<CellRecord>& cells);

struct ToggleReport {
    LaffEstimate think;
    LaffEstimate no_think;
    double delta_pp = 0.0;  // think - no_think, percentage points
    FisherResult fisher;    // latent-correct vs not, by condition
    double think_flip_rate = 0.0;
    double no_think_flip_rate = 0.0;
};

// Paired comparison of two runs over the same question set. Throws
// std::invalid_argument when the question sets are disjoint.
ToggleReport paired_toggle_report(const std::vector<CellRecord>& think_cells,
                                  const std::vector<CellRecord>& no_think_cells);

// Half-up rounding to the given number of decimals, for report rendering.
double round_half_up(double value, int decimals);

}  // namespace uceval
