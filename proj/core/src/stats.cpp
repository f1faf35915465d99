#include "uceval/stats.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace uceval {

namespace {
constexpr double z95 = 1.96;

double log_choose(int64_t n, int64_t k) {
    return std::lgamma(static_cast<double>(n + 1)) -
           std::lgamma(static_cast<double>(k + 1)) -
           std::lgamma(static_cast<double>(n - k + 1));
}
}  // namespace

std::pair<double, double> wilson_interval(int k, int n) {
    if (n <= 0) throw std::invalid_argument("wilson_interval: n must be >= 1");
    if (k < 0 || k > n) throw std::invalid_argument("wilson_interval: k out of range");
    double p = static_cast<double>(k) / n;
    double z2 = z95 * z95;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = (z95 / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    double lo = center - half;
    double hi = center + half;
    if (lo < 0.0) lo = 0.0;
    if (hi > 1.0) hi = 1.0;
    return {lo, hi};
}

LaffEstimate laff_estimate(int k, int n) {
    LaffEstimate e;
    e.k = k;
    e.n = n;
    if (n > 0) {
        e.point = static_cast<double>(k) / n;
        auto [lo, hi] = wilson_interval(k, n);
        e.ci_lo = lo;
        e.ci_hi = hi;
    }
    return e;
}

FisherResult fisher_exact(int64_t a, int64_t b, int64_t c, int64_t d) {
    if (a < 0 || b < 0 || c < 0 || d < 0)
        throw std::invalid_argument("fisher_exact: negative count");
    if (a + b + c + d == 0)
        throw std::invalid_argument("fisher_exact: all-zero table");

    FisherResult result;
    result.table = {a, b, c, d};

    int64_t r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
    double log_denominator = log_choose(n, c1);
    auto log_p_of = [&](int64_t x) {
        return log_choose(r1, x) + log_choose(r2, c1 - x) - log_denominator;
    };

    double log_p_obs = log_p_of(a);
    int64_t x_lo = std::max<int64_t>(0, c1 - r2);
    int64_t x_hi = std::min(r1, c1);
    double total = 0.0;
    for (int64_t x = x_lo; x <= x_hi; ++x) {
        double lp = log_p_of(x);
        // Tables as extreme as observed, with slack for lgamma rounding.
        if (lp <= log_p_obs + 1e-7) total += std::exp(lp);
    }
    result.p_two_sided = std::min(total, 1.0);
    return result;
}

PerRoundUc per_round_uc(const std::vector<CellRecord>& cells) {
    std::map<std::string, std::vector<const CellRecord*>> by_question;
    for (const auto& c : cells)
        by_question[c.model_id + "\x1f" + c.corpus + "\x1f" + c.question_id].push_back(&c);

    PerRoundUc out;
    for (const auto& [key, qcells] : by_question) {
        bool r0_correct = false;
        for (const CellRecord* c : qcells)
            if (c->round == 0 && c->b == 1) r0_correct = true;
        if (!r0_correct) continue;
        for (const CellRecord* c : qcells) {
            if (c->round < 1 || c->round > 8 || c->latent < 0) continue;
            size_t idx = static_cast<size_t>(c->round - 1);
            ++out.committed[idx];
            if (c->state == CellState::UC) ++out.uc[idx];
        }
    }
    for (size_t r = 0; r < 8; ++r)
        out.fraction[r] = out.committed[r] > 0
                              ? static_cast<double>(out.uc[r]) / out.committed[r]
                              : 0.0;
    return out;
}

ToggleReport paired_toggle_report(const std::vector<CellRecord>& think_cells,
                                  const std::vector<CellRecord>& no_think_cells) {
    std::set<std::string> think_ids, shared;
    for (const auto& c : think_cells) think_ids.insert(c.question_id);
    for (const auto& c : no_think_cells)
        if (think_ids.count(c.question_id)) shared.insert(c.question_id);
    if (shared.empty())
        throw std::invalid_argument("paired_toggle_report: question sets are disjoint");

    ToggleReport report;
    LaffDataset think = laff_dataset(think_cells);
    LaffDataset no_think = laff_dataset(no_think_cells);
    report.think = laff_estimate(think.k_latent_correct, think.n_committed);
    report.no_think = laff_estimate(no_think.k_latent_correct, no_think.n_committed);
    report.delta_pp = (report.think.point - report.no_think.point) * 100.0;
    report.fisher = fisher_exact(
        think.k_latent_correct, think.n_committed - think.k_latent_correct,
        no_think.k_latent_correct, no_think.n_committed - no_think.k_latent_correct);
    report.think_flip_rate = think.flip_rate;
    report.no_think_flip_rate = no_think.flip_rate;
    return report;
}

double round_half_up(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    return std::floor(value * scale + 0.5) / scale;
}

}  // namespace uceval
