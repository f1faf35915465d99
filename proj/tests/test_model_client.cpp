#include <cmath>

#include "doctest.h"
#include "uceval/errors.hpp"
#include "uceval/model_client.hpp"

using namespace uceval;

TEST_CASE("think toggle on splits block from visible answer") {
    auto split = extract_reasoning_surface(
        "<think>gravity doubles the speed each second... roughly 19.6</think>The answer is B", Surface::think_toggle_on);
    CHECK(split.trace == "gravity doubles the speed each second... roughly 19.6");
    CHECK(split.answer_text == "The answer is B");
    CHECK_FALSE(split.unterminated_think);
}

TEST_CASE("trace and answer partition the raw reply minus delimiters") {
    std::string raw = "<think>alpha beta</think>gamma";
    auto split = extract_reasoning_surface(raw, Surface::think_toggle_on);
    CHECK("<think>" + split.trace + "</think>" + split.answer_text == raw);
}

TEST_CASE("unterminated think block is recoverable") {
    auto split = extract_reasoning_surface("<think>half a thought", Surface::think_toggle_on);
    CHECK(split.trace == "half a thought");
    CHECK(split.answer_text.empty());
    CHECK(split.unterminated_think);
}

TEST_CASE("missing think block degrades to a bare answer") {
    auto split = extract_reasoning_surface("Just the answer: C", Surface::think_toggle_on);
    CHECK(split.trace.empty());
    CHECK(split.answer_text == "Just the answer: C");
    CHECK_FALSE(split.unterminated_think);
}

TEST_CASE("think toggle off never yields a trace") {
    std::string raw = "<think>should not appear</think>D";
    auto split = extract_reasoning_surface(raw, Surface::think_toggle_off);
    CHECK(split.trace.empty());
    CHECK(split.answer_text == raw);
}

TEST_CASE("reasoning channel separates analysis from final") {
    std::string raw = std::string(ChannelMarkers::analysis_start) +
                      "the premises force option A" + ChannelMarkers::segment_end +
                      ChannelMarkers::final_start + "A" + ChannelMarkers::segment_end;
    auto split = extract_reasoning_surface(raw, Surface::reasoning_channel);
    CHECK(split.trace == "the premises force option A");
    CHECK(split.answer_text == "A");
}

TEST_CASE("multiple analysis segments concatenate in order") {
    std::string raw = std::string(ChannelMarkers::analysis_start) + "first pass" +
                      ChannelMarkers::segment_end + ChannelMarkers::analysis_start +
                      "second pass" + ChannelMarkers::segment_end +
                      ChannelMarkers::final_start + "B" + ChannelMarkers::segment_end;
    auto split = extract_reasoning_surface(raw, Surface::reasoning_channel);
    CHECK(split.trace.find("first pass") != std::string::npos);
    CHECK(split.trace.find("second pass") != std::string::npos);
    CHECK(split.trace.find("first pass") < split.trace.find("second pass"));
    CHECK(split.answer_text == "B");
}

TEST_CASE("channel framing absent falls back to answer-only") {
    auto split = extract_reasoning_surface("plain text reply", Surface::reasoning_channel);
    CHECK(split.trace.empty());
    CHECK(split.answer_text == "plain text reply");
}

TEST_CASE("inline cot splits on the final-answer marker") {
    auto split = extract_reasoning_surface(
        "Work: 3 * 11 = 33, so thirty-three.\nFinal answer: 33", Surface::inline_cot);
    CHECK(split.trace == "Work: 3 * 11 = 33, so thirty-three.\n");
    CHECK(split.answer_text == "Final answer: 33");

    auto last_wins = extract_reasoning_surface(
        "Final answer: 1... wait, recompute.\nFinal answer: 2", Surface::inline_cot);
    CHECK(last_wins.answer_text == "Final answer: 2");
    CHECK(last_wins.trace == "Final answer: 1... wait, recompute.\n");

    auto no_marker = extract_reasoning_surface("unstructured prose", Surface::inline_cot);
    CHECK(no_marker.trace.empty());
    CHECK(no_marker.answer_text == "unstructured prose");
}

TEST_CASE("surface names round-trip through strings") {
    for (Surface s : {Surface::think_toggle_on, Surface::think_toggle_off,
                      Surface::reasoning_channel, Surface::inline_cot}) {
        CHECK(surface_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(surface_from_string("telepathy"), config_error);
}

TEST_CASE("letter mass folds space variants and renormalizes") {
    std::map<std::string, double> mass{
        {"A", 0.30}, {" A", 0.10}, {"B", 0.20}, {" B", 0.05}, {"C", 0.05},
        {"the", 0.25}, {" D", 0.05},
    };
    auto probs = fold_letter_mass(mass, {'A', 'B', 'C', 'D'});
    REQUIRE(probs.size() == 4);
    double total = 0.0;
    for (const auto& [letter, p] : probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // 0.40 : 0.25 : 0.05 : 0.05 over a 0.75 letter mass.
    CHECK(probs['A'] == doctest::Approx(0.40 / 0.75));
    CHECK(probs['B'] == doctest::Approx(0.25 / 0.75));
    CHECK(probs['C'] == doctest::Approx(0.05 / 0.75));
    CHECK(probs['D'] == doctest::Approx(0.05 / 0.75));
}

TEST_CASE("letters outside the request are ignored") {
    std::map<std::string, double> mass{{"A", 0.5}, {"E", 0.5}};
    auto probs = fold_letter_mass(mass, {'A', 'B'});
    CHECK(probs['A'] == doctest::Approx(1.0));
    CHECK(probs['B'] == doctest::Approx(0.0));
}

TEST_CASE("zero letter mass is a protocol error") {
    std::map<std::string, double> mass{{"the", 0.7}, {"answer", 0.3}};
    CHECK_THROWS_AS(fold_letter_mass(mass, {'A', 'B', 'C'}), protocol_error);
}
