#include "uceval/driver.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "uceval/attacks.hpp"
#include "uceval/errors.hpp"
#include "uceval/taxonomy.hpp"

namespace uceval {

std::vector<TurnRecord> run_trajectory(ChatBackend& model, ChatBackend& judge,
                                       const Question& q,
                                       const WrongAnswerPool& pool,
                                       uint64_t attack_seed,
                                       const DriverOptions& opt,
                                       JournalWriter* journal) {
    const auto& bank = attack_bank();
    AttackOrder order = shuffled_attack_order(q.id, attack_seed);
    bool simulated = model.config().kind == BackendKind::simulated;

    std::vector<ChatMessage> history;
    std::vector<TurnRecord> turns;
    turns.reserve(static_cast<size_t>(opt.rounds));
    for (int r = 0; r < opt.rounds; ++r) {
        const AttackTemplate* attack =
            r == 0 ? nullptr
                   : &bank[static_cast<size_t>(order.order[static_cast<size_t>(r - 1)] - 1)];
        std::string user_msg =
            r == 0 ? q.render_prompt() : render_attack(*attack, pool, q);

        TurnContext ctx;
        ctx.question = &q;
        ctx.round = r;
        ctx.attack = attack;
        ctx.pool = &pool;

        auto started = std::chrono::steady_clock::now();
        ModelReply reply = model.chat_turn(history, user_msg, &ctx);
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();

        BehavioralGrade grade = grade_behavioral(q, reply.answer_text, judge);
        LatentSignal latent = grade_latent(q, reply.trace, judge);

        TurnRecord rec;
        rec.question_id = q.id;
        rec.round = r;
        rec.attack_id = attack != nullptr ? attack->id : -1;
        rec.user_msg = user_msg;
        rec.raw = reply.raw;
        rec.trace = reply.trace;
        rec.answer_text = reply.answer_text;
        rec.emitted = grade.extracted.display();
        rec.behavioral = grade.b == 1;
        rec.latent = latent.committed ? latent.correct : -1;
        rec.trace_value = latent.committed ? latent.concluded.display() : "";
        rec.state = to_string(classify_cell(grade.b, rec.latent));
        // Scripted runs pin wall time to zero so journals are byte-stable.
        rec.wall_time_ms = simulated ? 0 : elapsed;
        rec.usage = reply.usage;
        if (journal != nullptr) journal->write_turn(rec);
        turns.push_back(std::move(rec));

        history.push_back({"user", user_msg});
        history.push_back(
            {"assistant", opt.carry_traces ? reply.raw : reply.answer_text});
    }
    return turns;
}

namespace {

void journal_one(JournalWriter& writer, const Question& q,
                 const WrongAnswerPool& pool, const std::vector<TurnRecord>& turns) {
    writer.write_question(q, pool);
    for (const auto& t : turns) writer.write_turn(t);
    writer.trajectory_complete(q.id);
}

}  // namespace

RunStats run_questions(ChatBackend& model, ChatBackend& judge,
                       const std::vector<Question>& questions,
                       const std::map<std::string, WrongAnswerPool>& pools,
                       JournalWriter& writer, uint64_t attack_seed,
                       const DriverOptions& opt,
                       const std::set<std::string>& already_complete) {
    RunStats stats;
    std::vector<const Question*> todo;
    for (const auto& q : questions) {
        if (already_complete.count(q.id)) {
            ++stats.skipped;
            continue;
        }
        if (pools.find(q.id) == pools.end())
            throw config_error("no wrong-answer pool for question " + q.id);
        todo.push_back(&q);
    }

    int workers = std::max(1, opt.concurrency);
    if (workers == 1) {
        for (const Question* q : todo) {
            writer.write_question(*q, pools.at(q->id));
            try {
                run_trajectory(model, judge, *q, pools.at(q->id), attack_seed,
                               opt, &writer);
            } catch (const transport_error&) {
                writer.trajectory_restart(q->id);
                ++stats.failed;
                continue;
            }
            writer.trajectory_complete(q->id);
            ++stats.completed;
        }
        return stats;
    }

    // Trajectories run in parallel but land in the journal in question
    // order, so scheduling cannot change the bytes.
    std::vector<std::vector<TurnRecord>> results(todo.size());
    std::vector<bool> done(todo.size(), false);
    std::exception_ptr failure;
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            try {
                auto turns = run_trajectory(model, judge, *todo[i],
                                            pools.at(todo[i]->id), attack_seed, opt);
                std::lock_guard<std::mutex> lock(mu);
                results[i] = std::move(turns);
                done[i] = true;
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                done[i] = true;
            }
            cv.notify_all();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);

    {
        std::unique_lock<std::mutex> lock(mu);
        for (size_t i = 0; i < todo.size(); ++i) {
            cv.wait(lock, [&] { return done[i]; });
            if (failure) break;
            journal_one(writer, *todo[i], pools.at(todo[i]->id), results[i]);
            ++stats.completed;
        }
    }
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return stats;
}

ResumePlan plan_resume(const JournalContents& journal,
                       const std::vector<Question>& questions) {
    ResumePlan plan;
    std::set<std::string> journaled;
    for (const auto& q : journal.questions) journaled.insert(q.id);
    for (const auto& t : journal.turns) journaled.insert(t.question_id);

    for (const auto& q : questions) {
        if (journal.completed.count(q.id)) {
            plan.completed.insert(q.id);
        } else if (journaled.count(q.id)) {
            plan.restart.push_back(q.id);
        } else {
            plan.fresh.push_back(q.id);
        }
    }
    return plan;
}

}  // namespace uceval
