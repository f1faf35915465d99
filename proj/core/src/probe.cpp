#include "uceval/probe.hpp"

#include <algorithm>
#include <fstream>

#include "uceval/errors.hpp"
#include "uceval/report.hpp"
#include "uceval/rng.hpp"

namespace uceval {

std::string to_string(PrefixVariant v) {
    switch (v) {
        case PrefixVariant::plain: return "plain";
        case PrefixVariant::templated: return "templated";
        case PrefixVariant::bare: return "bare";
        case PrefixVariant::natural: return "natural";
    }
    return "plain";
}

PrefixVariant prefix_variant_from_string(const std::string& s) {
    if (s == "plain") return PrefixVariant::plain;
    if (s == "templated") return PrefixVariant::templated;
    if (s == "bare") return PrefixVariant::bare;
    if (s == "natural") return PrefixVariant::natural;
    throw config_error("unknown prefix variant: " + s);
}

namespace {

std::string close_trace(const std::string& trace, Surface surface) {
    switch (surface) {
        case Surface::think_toggle_on:
            return "<think>" + trace + "</think>\n";
        case Surface::reasoning_channel:
            return std::string(ChannelMarkers::analysis_start) + trace +
                   ChannelMarkers::segment_end + ChannelMarkers::final_start;
        case Surface::inline_cot:
            return trace + "\n";
        case Surface::think_toggle_off:
            return {};
    }
    return {};
}

}  // namespace

std::optional<std::string> probe_prefix(
    const std::vector<const TurnRecord*>& trajectory, int round,
    Surface surface, PrefixVariant variant) {
    const TurnRecord* turn = nullptr;
    std::string dialogue;
    for (const TurnRecord* t : trajectory) {
        if (t->round > round) continue;
        dialogue += t->user_msg;
        dialogue += "\n";
        if (t->round == round) {
            turn = t;
            break;
        }
        dialogue += t->answer_text;
        dialogue += "\n";
    }
    if (turn == nullptr || turn->trace.empty()) return std::nullopt;

    std::string prefix = dialogue + close_trace(turn->trace, surface);
    switch (variant) {
        case PrefixVariant::plain:
            return prefix + plain_prefix;
        case PrefixVariant::templated:
            return prefix + templated_prefix;
        case PrefixVariant::bare:
            return prefix;
        case PrefixVariant::natural: {
            // The model's own answer text up to the emitted letter.
            if (turn->emitted.size() != 1) return std::nullopt;
            char letter = turn->emitted[0];
            size_t at = std::string::npos;
            for (size_t i = 0; i < turn->answer_text.size(); ++i) {
                char c = turn->answer_text[i];
                if (c != letter) continue;
                bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(
                                             turn->answer_text[i - 1]));
                bool right_ok = i + 1 == turn->answer_text.size() ||
                                !std::isalnum(static_cast<unsigned char>(
                                    turn->answer_text[i + 1]));
                if (left_ok && right_ok) {
                    at = i;
                    break;
                }
            }
            if (at == std::string::npos) return std::nullopt;
            return prefix + turn->answer_text.substr(0, at);
        }
    }
    return std::nullopt;
}

std::optional<SlotProbeRecord> probe_cell(
    ChatBackend& backend, const Question& q, const WrongAnswerPool* pool,
    const std::vector<const TurnRecord*>& trajectory, int round,
    CellState state, Surface surface, PrefixVariant variant) {
    auto prefix = probe_prefix(trajectory, round, surface, variant);
    if (!prefix) return std::nullopt;

    TurnContext ctx;
    ctx.question = &q;
    ctx.round = round;
    ctx.pool = pool;
    ctx.probe_variant = static_cast<int>(variant);

    SlotProbeRecord rec;
    rec.question_id = q.id;
    rec.round = round;
    rec.state = state;
    rec.variant = variant;
    rec.dist = backend.next_token_letter_distribution(*prefix, q.valid_letters(), &ctx);
    rec.p_correct = rec.dist.count(q.gold.letter) ? rec.dist.at(q.gold.letter) : 0.0;

    char argmax = 0;
    double best = -1.0;
    for (char c : q.valid_letters()) {
        double p = rec.dist.count(c) ? rec.dist.at(c) : 0.0;
        if (p > best) {  // strict: ties keep the lowest letter
            best = p;
            argmax = c;
        }
    }
    rec.argmax_correct = argmax == q.gold.letter;
    return rec;
}

std::vector<SlotProbeRecord> run_probe(ChatBackend& backend,
                                       const JournalContents& journal,
                                       const std::vector<PrefixVariant>& variants,
                                       const ProbeCaps& caps) {
    struct Candidate {
        const Question* q;
        const WrongAnswerPool* pool;
        std::vector<const TurnRecord*> trajectory;
        int round;
        CellState state;
    };
    std::map<CellState, std::vector<Candidate>> by_state;

    for (const auto& q : journal.questions) {
        if (q.format != QuestionFormat::mcq) continue;
        if (!journal.completed.count(q.id)) continue;
        auto trajectory = journal.final_turns(q.id);
        const WrongAnswerPool* pool = nullptr;
        auto pit = journal.pools.find(q.id);
        if (pit != journal.pools.end()) pool = &pit->second;
        for (const TurnRecord* t : trajectory) {
            if (t->latent < 0 || t->trace.empty()) continue;
            CellState state = cell_state_from_string(t->state);
            by_state[state].push_back({&q, pool, trajectory, t->round, state});
        }
    }

    std::vector<SlotProbeRecord> records;
    for (auto& [state, candidates] : by_state) {
        auto rng = stream_for(caps.seed, to_string(state), "probe_sample");
        seeded_shuffle(candidates, rng);
        int take = caps.per_state > 0
                       ? std::min<int>(caps.per_state, static_cast<int>(candidates.size()))
                       : static_cast<int>(candidates.size());
        for (int i = 0; i < take; ++i) {
            const Candidate& cand = candidates[static_cast<size_t>(i)];
            for (PrefixVariant variant : variants) {
                auto rec = probe_cell(backend, *cand.q, cand.pool, cand.trajectory,
                                      cand.round, cand.state,
                                      journal.header.surface, variant);
                if (rec) records.push_back(std::move(*rec));
            }
        }
    }
    return records;
}

const ProbeAggregate* ProbeReport::find(CellState s, PrefixVariant v) const {
    for (const auto& row : rows)
        if (row.state == s && row.variant == v) return &row;
    return nullptr;
}

ProbeReport probe_report(const std::vector<SlotProbeRecord>& records) {
    struct Acc {
        int n = 0;
        double p_sum = 0.0;
        int argmax = 0;
    };
    std::map<std::pair<int, int>, Acc> acc;
    for (const auto& rec : records) {
        Acc& a = acc[{static_cast<int>(rec.state), static_cast<int>(rec.variant)}];
        ++a.n;
        a.p_sum += rec.p_correct;
        if (rec.argmax_correct) ++a.argmax;
    }

    ProbeReport report;
    bool have_uc = false;
    for (const auto& [key, a] : acc) {
        ProbeAggregate row;
        row.state = static_cast<CellState>(key.first);
        row.variant = static_cast<PrefixVariant>(key.second);
        row.n = a.n;
        row.mean_p_correct = a.n > 0 ? a.p_sum / a.n : 0.0;
        row.argmax_correct_pct = a.n > 0 ? 100.0 * a.argmax / a.n : 0.0;
        if (row.state == CellState::UC && row.n > 0) {
            if (!have_uc) {
                report.uc_argmax_lo = report.uc_argmax_hi = row.argmax_correct_pct;
                have_uc = true;
            } else {
                report.uc_argmax_lo = std::min(report.uc_argmax_lo, row.argmax_correct_pct);
                report.uc_argmax_hi = std::max(report.uc_argmax_hi, row.argmax_correct_pct);
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

std::size_t emit_probe_csv(const std::vector<SlotProbeRecord>& records,
                           const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw journal_error("cannot write probe csv: " + path);
    out << "cell_id,state,variant";
    for (char c = 'A'; c <= 'J'; ++c) out << ",p_" << c;
    out << ",p_correct,argmax_correct\n";
    for (const auto& rec : records) {
        out << rec.cell_id() << ',' << to_string(rec.state) << ','
            << to_string(rec.variant);
        for (char c = 'A'; c <= 'J'; ++c) {
            out << ',';
            auto it = rec.dist.find(c);
            if (it != rec.dist.end()) out << format_fraction(it->second);
        }
        out << ',' << format_fraction(rec.p_correct) << ','
            << (rec.argmax_correct ? 1 : 0) << '\n';
    }
    if (!out) throw journal_error("probe csv write failed: " + path);
    return records.size();
}

}  // namespace uceval
