#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>

#include "doctest.h"
#include "uceval/stats.hpp"

using namespace uceval;

namespace {

using boost::multiprecision::cpp_int;

cpp_int factorial(int64_t n) {
    cpp_int f = 1;
    for (int64_t i = 2; i <= n; ++i) f *= i;
    return f;
}

// Exact rational hypergeometric tail: numerator and denominator of the
// two-sided p-value as big integers, no floating point anywhere.
double fisher_big_rational(int64_t a, int64_t b, int64_t c, int64_t d) {
    const int64_t r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
    // P(table with top-left = x) = C(r1,x) C(r2,c1-x) / C(n,c1); compare the
    // integer numerators C(r1,x) C(r2,c1-x) instead of probabilities.
    auto choose = [](int64_t nn, int64_t kk) -> cpp_int {
        if (kk < 0 || kk > nn) return 0;
        return factorial(nn) / (factorial(kk) * factorial(nn - kk));
    };
    cpp_int observed = choose(r1, a) * choose(r2, c1 - a);
    cpp_int tail = 0, total = 0;
    int64_t lo = std::max<int64_t>(0, c1 - r2), hi = std::min(r1, c1);
    for (int64_t x = lo; x <= hi; ++x) {
        cpp_int w = choose(r1, x) * choose(r2, c1 - x);
        total += w;
        if (w <= observed) tail += w;
    }
    return static_cast<double>(cpp_int(tail * 1000000000000000000LL) / total) / 1e18;
}

std::vector<CellRecord> make_question(const std::string& id, const std::string& model,
                                      const std::vector<int>& answers,
                                      const std::vector<int>& latents) {
    std::vector<CellRecord> cells;
    for (size_t r = 0; r < answers.size(); ++r) {
        CellRecord cell;
        cell.model_id = model;
        cell.corpus = "mt_cons";
        cell.question_id = id;
        cell.round = static_cast<int>(r);
        cell.attack_id = (r == 0) ? -1 : static_cast<int>(r);
        cell.b = answers[r];
        cell.latent = latents[r];
        cell.trace_letter = latents[r] == -1 ? "N" : (latents[r] == 1 ? "B" : "C");
        cell.emitted_letter = answers[r] == 1 ? "B" : "C";
        cell.state = classify_cell(cell.b, cell.latent);
        cells.push_back(std::move(cell));
    }
    return cells;
}

}  // namespace

TEST_CASE("wilson interval reproduces worked examples") {
    auto [lo, hi] = wilson_interval(34, 67);
    CHECK(round_half_up(lo, 2) == doctest::Approx(0.39));
    CHECK(round_half_up(hi, 2) == doctest::Approx(0.62));

    auto [lo2, hi2] = wilson_interval(12, 14);
    CHECK(round_half_up(lo2, 2) == doctest::Approx(0.60));
    CHECK(round_half_up(hi2, 2) == doctest::Approx(0.96));

    auto [lo0, hi0] = wilson_interval(0, 10);
    CHECK(lo0 == doctest::Approx(0.0));
    CHECK(hi0 == doctest::Approx(0.27755).epsilon(1e-3));

    auto [loa, hia] = wilson_interval(10, 10);
    CHECK(hia == doctest::Approx(1.0));
    CHECK(loa == doctest::Approx(1.0 - 0.27755).epsilon(1e-3));

    CHECK_THROWS_AS(wilson_interval(0, 0), std::invalid_argument);
}

TEST_CASE("wilson interval brackets the point estimate and stays in [0,1]") {
    for (int n : {1, 5, 14, 67, 200}) {
        for (int k = 0; k <= n; k += std::max(1, n / 7)) {
            auto [lo, hi] = wilson_interval(k, n);
            double p = static_cast<double>(k) / n;
            CHECK(lo >= 0.0);
            CHECK(hi <= 1.0);
            CHECK(lo <= p + 1e-12);
            CHECK(hi >= p - 1e-12);
        }
    }
}

TEST_CASE("laff_estimate carries k, n, point, and the interval") {
    LaffEstimate e = laff_estimate(34, 67);
    CHECK(e.k == 34);
    CHECK(e.n == 67);
    CHECK(e.point == doctest::Approx(34.0 / 67.0));
    auto [lo, hi] = wilson_interval(34, 67);
    CHECK(e.ci_lo == doctest::Approx(lo));
    CHECK(e.ci_hi == doctest::Approx(hi));
}

TEST_CASE("fisher exact matches frozen reference values") {
    CHECK(fisher_exact(34, 33, 23, 156).p_two_sided ==
          doctest::Approx(2.9963531689404848e-09).epsilon(1e-9));
    CHECK(fisher_exact(20, 20, 12, 70).p_two_sided ==
          doctest::Approx(5.969868460580195e-05).epsilon(1e-9));
}

TEST_CASE("fisher exact agrees with a big-integer oracle on small tables") {
    for (int64_t a = 0; a <= 6; ++a)
        for (int64_t b = 0; b <= 6; b += 2)
            for (int64_t c = 0; c <= 6; c += 3)
                for (int64_t d = 0; d <= 6; ++d) {
                    if (a + b + c + d == 0) continue;
                    double expected = fisher_big_rational(a, b, c, d);
                    double got = fisher_exact(a, b, c, d).p_two_sided;
                    CAPTURE(a);
                    CAPTURE(b);
                    CAPTURE(c);
                    CAPTURE(d);
                    CHECK(got == doctest::Approx(expected).epsilon(1e-6));
                }
    // A few larger spot checks around the sizes the reports use.
    for (auto [a, b, c, d] : std::vector<std::array<int64_t, 4>>{
             {34, 33, 23, 156}, {20, 20, 12, 70}, {5, 35, 30, 10}, {18, 2, 2, 18}}) {
        double expected = fisher_big_rational(a, b, c, d);
        double got = fisher_exact(a, b, c, d).p_two_sided;
        CHECK(got == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("fisher exact degenerate and symmetric cases") {
    CHECK_THROWS_AS(fisher_exact(0, 0, 0, 0), std::invalid_argument);
    // An empty row forces p = 1: only one table has these margins.
    CHECK(fisher_exact(0, 0, 5, 5).p_two_sided == doctest::Approx(1.0));
    // Swapping rows or columns leaves the two-sided p unchanged.
    double base = fisher_exact(7, 3, 2, 9).p_two_sided;
    CHECK(fisher_exact(2, 9, 7, 3).p_two_sided == doctest::Approx(base));
    CHECK(fisher_exact(3, 7, 9, 2).p_two_sided == doctest::Approx(base));
}

TEST_CASE("round_half_up rounds .5 away from truncation") {
    CHECK(round_half_up(0.125, 2) == doctest::Approx(0.13));
    CHECK(round_half_up(0.115, 2) == doctest::Approx(0.12));
    CHECK(round_half_up(2.5, 0) == doctest::Approx(3.0));
    CHECK(round_half_up(0.394, 2) == doctest::Approx(0.39));
    // Halves round toward positive infinity, so a negative half shrinks.
    CHECK(round_half_up(-0.125, 2) == doctest::Approx(-0.12));
}

TEST_CASE("per-round UC counts committed cells of R0-correct questions") {
    std::vector<CellRecord> cells;
    // R0-correct, flips at R2, trace keeps gold at R2 and R3 then flips.
    auto a = make_question("q-a", "m", {1, 1, 0, 0, 0, 0, 0, 0, 0},
                           {1, 1, 1, 1, 0, 0, 0, 0, 0});
    // R0-correct, abstains at R1, never flips behaviorally.
    auto b = make_question("q-b", "m", {1, 1, 1, 1, 1, 1, 1, 1, 1},
                           {1, -1, 1, 1, 1, 1, 1, 1, 1});
    // R0-wrong: contributes nothing.
    auto c = make_question("q-c", "m", {0, 0, 0, 0, 0, 0, 0, 0, 0},
                           {1, 1, 1, 1, 1, 1, 1, 1, 1});
    for (auto* qs : {&a, &b, &c}) cells.insert(cells.end(), qs->begin(), qs->end());

    PerRoundUc uc = per_round_uc(cells);
    // Round 1 (index 0): q-a committed FC, q-b abstained -> 1 committed, 0 UC.
    CHECK(uc.committed[0] == 1);
    CHECK(uc.uc[0] == 0);
    // Round 2: q-a is UC (b=0, latent=1), q-b is FC.
    CHECK(uc.committed[1] == 2);
    CHECK(uc.uc[1] == 1);
    CHECK(uc.fraction[1] == doctest::Approx(0.5));
    // Round 4: q-a is UI (committed, latent wrong), q-b FC.
    CHECK(uc.committed[3] == 2);
    CHECK(uc.uc[3] == 0);
}

TEST_CASE("paired toggle report compares conditions over shared questions") {
    std::vector<CellRecord> think, no_think;
    // think: 3 questions, 2 flips, both with latent-correct at the flip.
    auto t1 = make_question("q-1", "m-think", {1, 0, 0, 0, 0, 0, 0, 0, 0},
                            {1, 1, 0, 0, 0, 0, 0, 0, 0});
    auto t2 = make_question("q-2", "m-think", {1, 1, 0, 0, 0, 0, 0, 0, 0},
                            {1, 1, 1, 0, 0, 0, 0, 0, 0});
    auto t3 = make_question("q-3", "m-think", {1, 1, 1, 1, 1, 1, 1, 1, 1},
                            {1, 1, 1, 1, 1, 1, 1, 1, 1});
    // no_think: same questions, 2 flips, neither latent-correct.
    auto n1 = make_question("q-1", "m-plain", {1, 0, 0, 0, 0, 0, 0, 0, 0},
                            {1, 0, 0, 0, 0, 0, 0, 0, 0});
    auto n2 = make_question("q-2", "m-plain", {1, 0, 0, 0, 0, 0, 0, 0, 0},
                            {1, 0, 0, 0, 0, 0, 0, 0, 0});
    auto n3 = make_question("q-3", "m-plain", {1, 1, 1, 1, 1, 1, 1, 1, 1},
                            {1, 1, 1, 1, 1, 1, 1, 1, 1});
    for (auto* qs : {&t1, &t2, &t3}) think.insert(think.end(), qs->begin(), qs->end());
    for (auto* qs : {&n1, &n2, &n3})
        no_think.insert(no_think.end(), qs->begin(), qs->end());

    ToggleReport rep = paired_toggle_report(think, no_think);
    CHECK(rep.think.k == 2);
    CHECK(rep.think.n == 2);
    CHECK(rep.no_think.k == 0);
    CHECK(rep.no_think.n == 2);
    CHECK(rep.delta_pp == doctest::Approx(100.0));
    CHECK(rep.think_flip_rate == doctest::Approx(2.0 / 3.0));
    CHECK(rep.no_think_flip_rate == doctest::Approx(2.0 / 3.0));
    CHECK(rep.fisher.table == std::array<int64_t, 4>{2, 0, 0, 2});

    auto disjoint = make_question("q-9", "m-plain", {1, 1, 1, 1, 1, 1, 1, 1, 1},
                                  {1, 1, 1, 1, 1, 1, 1, 1, 1});
    CHECK_THROWS_AS(paired_toggle_report(think, disjoint), std::invalid_argument);
}
