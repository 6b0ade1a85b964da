#pragma once

#include "txpar/analysis.hpp"
#include "txpar/net.hpp"
#include "txpar/state.hpp"
#include "txpar/tx.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace txpar {

enum class CollectorKind { least, instrumented };

// The least collector binds exactly the keys whose values change.
inline StateUpdate collect_least(const ChainState& sigma, const Transaction& t,
                                 const ContractRegistry& reg) {
    return state_diff(exec_tx(sigma, t, reg), sigma);
}

// The instrumented collector binds every key the run wrote, at its final
// value, including rewrites that restore the old value. Failed
// transactions write nothing.
inline StateUpdate collect_instrumented(const ChainState& sigma, const Transaction& t,
                                        const ContractRegistry& reg) {
    WriteLog log;
    ChainState post = exec_tx(sigma, t, reg, &log);
    StateUpdate u;
    for (const auto& qk : log) {
        auto v = post.lookup(qk);
        if (v) u.bind(qk, *v);
    }
    return u;
}

inline StateUpdate collect_update(CollectorKind kind, const ChainState& sigma,
                                  const Transaction& t, const ContractRegistry& reg) {
    return kind == CollectorKind::least ? collect_least(sigma, t, reg)
                                        : collect_instrumented(sigma, t, reg);
}

// Raised when two updates collected for one step bind a common key. The
// theorem backing the pipeline rules this out for schedules derived from
// strong swappability with the least collector.
class ConflictError : public std::runtime_error {
  public:
    ConflictError(Transaction first_tx, Transaction second_tx, std::set<QualifiedKey> keys)
        : std::runtime_error("conflicting updates between " + first_tx.to_string() + " and " +
                             second_tx.to_string() + " on " + encode_key(*keys.begin())),
          first(std::move(first_tx)),
          second(std::move(second_tx)),
          overlap(std::move(keys)) {}

    Transaction first;
    Transaction second;
    std::set<QualifiedKey> overlap;
};

namespace detail {

// Collects one update per transaction, every run reading the same
// snapshot. With more than one worker the collections run on a pool;
// results land in input order, so the outcome is thread-count agnostic.
inline std::vector<StateUpdate> collect_all(const ChainState& sigma,
                                            const std::vector<Transaction>& txs,
                                            const ContractRegistry& reg, CollectorKind kind,
                                            unsigned workers) {
    std::vector<StateUpdate> updates(txs.size());
    if (workers <= 1 || txs.size() <= 1) {
        for (std::size_t i = 0; i < txs.size(); ++i)
            updates[i] = collect_update(kind, sigma, txs[i], reg);
        return updates;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&]() {
        try {
            for (std::size_t i; (i = next.fetch_add(1)) < txs.size();)
                updates[i] = collect_update(kind, sigma, txs[i], reg);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<std::size_t>(workers, txs.size());
    pool.reserve(count);
    for (unsigned i = 0; i < count; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return updates;
}

// Folds updates with the disjoint-domain merge, naming the offending
// transactions when domains overlap.
inline StateUpdate merge_step_updates(const std::vector<Transaction>& txs,
                                      const std::vector<StateUpdate>& updates) {
    StateUpdate merged;
    std::map<QualifiedKey, std::size_t> owner;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        for (const auto& [qk, val] : updates[i].bindings()) {
            auto [it, inserted] = owner.emplace(qk, i);
            if (!inserted) throw ConflictError(txs[it->second], txs[i], {qk});
            merged.bind(qk, val);
        }
    }
    return merged;
}

}  // namespace detail

// Executes one step: every member runs against the same snapshot, the
// collected updates merge, and the merge applies to the snapshot.
inline ChainState exec_step(const ChainState& sigma, const std::vector<Transaction>& txs,
                            const ContractRegistry& reg,
                            CollectorKind kind = CollectorKind::least, unsigned workers = 1) {
    std::vector<StateUpdate> updates = detail::collect_all(sigma, txs, reg, kind, workers);
    return apply_update(sigma, detail::merge_step_updates(txs, updates));
}

namespace detail {

inline std::vector<Transaction> step_members(const Blockchain& block, const Step& step) {
    std::vector<Transaction> txs;
    for (std::size_t pos : step) {
        if (pos < 1 || pos > block.size())
            throw std::invalid_argument("step position out of range: " + std::to_string(pos));
        txs.push_back(block[pos - 1]);
    }
    return txs;
}

}  // namespace detail

// Left fold of exec_step over a schedule of block positions.
inline ChainState exec_step_sequence(const ChainState& sigma, const Blockchain& block,
                                     const std::vector<Step>& schedule,
                                     const ContractRegistry& reg,
                                     CollectorKind kind = CollectorKind::least,
                                     unsigned workers = 1) {
    ChainState cur = sigma;
    for (const auto& step : schedule)
        cur = exec_step(cur, detail::step_members(block, step), reg, kind, workers);
    return cur;
}

struct ExecutionReport {
    std::vector<Step> schedule;
    std::vector<double> step_millis;                    // wall clock per step
    std::vector<std::vector<std::size_t>> update_sizes; // keys bound, per member
    std::string digest;
    std::size_t conflicts{0};

    double total_millis() const {
        double sum = 0;
        for (double ms : step_millis) sum += ms;
        return sum;
    }
};

struct ParallelOptions {
    unsigned workers{1};
    bool width_limit{false};  // cap steps at `workers` members
    CollectorKind collector{CollectorKind::least};
};

struct ParallelResult {
    ChainState state;
    ExecutionReport report;
};

// The full pipeline: static relation, occurrence net, greedy schedule,
// step-by-step execution on a worker pool. The final state equals the
// serial left fold of the block.
inline ParallelResult exec_parallel(const ChainState& initial, const Blockchain& block,
                                    const ContractRegistry& reg,
                                    const ParallelOptions& opt = {}) {
    if (opt.workers < 1) throw std::invalid_argument("workers must be at least 1");
    Net net = build_net(block, symmetric_closure(swap_relation(block, reg)));
    std::vector<Step> schedule =
        greedy_maximal_schedule(net, opt.width_limit ? opt.workers : 0);

    ParallelResult out{initial, {}};
    out.report.schedule = schedule;
    for (const auto& step : schedule) {
        std::vector<Transaction> txs = detail::step_members(block, step);
        auto started = std::chrono::steady_clock::now();
        std::vector<StateUpdate> updates =
            detail::collect_all(out.state, txs, reg, opt.collector, opt.workers);
        StateUpdate merged = detail::merge_step_updates(txs, updates);
        out.state = apply_update(out.state, merged);
        auto finished = std::chrono::steady_clock::now();
        out.report.step_millis.push_back(
            std::chrono::duration<double, std::milli>(finished - started).count());
        std::vector<std::size_t> sizes;
        for (const auto& u : updates) sizes.push_back(u.size());
        out.report.update_sizes.push_back(std::move(sizes));
    }
    out.report.digest = state_digest(out.state);
    return out;
}

struct ValidationOutcome {
    bool ok{};
    std::string expected;
    std::string actual;
};

// Validator workflow: rebuild relation, net, and schedule from the block
// order alone, execute, and compare digests. Schedule choice cannot
// change the digest, so any maximal schedule serves.
inline ValidationOutcome validate_block(const ChainState& initial, const Blockchain& block,
                                        const ContractRegistry& reg,
                                        const std::string& expected_digest,
                                        const ParallelOptions& opt = {}) {
    ParallelResult run = exec_parallel(initial, block, reg, opt);
    return ValidationOutcome{run.report.digest == expected_digest, expected_digest,
                             run.report.digest};
}

// Miner ordering policy: rounds of pairwise-independent transactions,
// greedily filled in arrival order, widen the early steps. A policy may
// permute the block it mines; execution semantics follow the new order.
inline Blockchain reorder_greedy_parallel(const Blockchain& block, const ContractRegistry& reg) {
    std::vector<bool> placed(block.size(), false);
    Blockchain out;
    std::size_t remaining = block.size();
    while (remaining > 0) {
        std::vector<std::size_t> round;
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (placed[i]) continue;
            bool independent = true;
            for (std::size_t j : round) {
                if (!strongly_swappable(block[j], block[i], reg)) {
                    independent = false;
                    break;
                }
            }
            if (independent) round.push_back(i);
        }
        for (std::size_t i : round) {
            placed[i] = true;
            out.push_back(block[i]);
            --remaining;
        }
    }
    return out;
}

}  // namespace txpar
