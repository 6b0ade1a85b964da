#pragma once

#include "txpar/state.hpp"
#include "txpar/tx.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace txpar {

// Either every key or a finite set of them.
struct KeySet {
    bool universe = false;
    std::set<QualifiedKey> keys;

    static KeySet all() { return KeySet{true, {}}; }
    static KeySet of(std::set<QualifiedKey> ks) { return KeySet{false, std::move(ks)}; }
};

// Agreement on a key set; a key unbound on both sides agrees.
inline bool equiv_on(const ChainState& a, const ChainState& b, const KeySet& q) {
    if (q.universe) return a == b;
    for (const auto& qk : q.keys)
        if (a.lookup(qk) != b.lookup(qk)) return false;
    return true;
}

// Agreement on every key a coverage predicate admits. Candidate keys are the
// ones bound on either side; keys bound on neither agree trivially.
template <typename Covers>
bool agrees_where(const ChainState& a, const ChainState& b, Covers&& covers) {
    for (const ChainState* s : {&a, &b})
        for (const auto& [addr, store] : s->stores())
            for (const auto& [key, _] : store) {
                QualifiedKey qk{addr, key};
                if (covers(qk) && a.lookup(qk) != b.lookup(qk)) return false;
            }
    return true;
}

// A finite set of states standing in for "all reachable states" in the
// semantic checks below. Verdicts are relative to the universe used.
struct StateUniverse {
    std::vector<ChainState> states;

    static StateUniverse explicit_states(std::vector<ChainState> states) {
        return StateUniverse{std::move(states)};
    }

    // Everything reachable from `initial` by firing at most `depth`
    // transactions drawn (with repetition) from the pool.
    static StateUniverse bounded_reachable(const ChainState& initial, const Blockchain& pool,
                                           const ContractRegistry& reg, std::size_t depth = 3) {
        StateUniverse u;
        std::set<std::string> seen;
        std::vector<ChainState> frontier;
        auto admit = [&](const ChainState& s) {
            if (!seen.insert(state_digest(s)).second) return false;
            u.states.push_back(s);
            return true;
        };
        admit(initial);
        frontier.push_back(initial);
        for (std::size_t d = 0; d < depth; ++d) {
            std::vector<ChainState> next;
            for (const auto& s : frontier)
                for (const auto& t : pool) {
                    ChainState out = exec_tx(s, t, reg);
                    if (admit(out)) next.push_back(std::move(out));
                }
            if (next.empty()) break;
            frontier = std::move(next);
        }
        return u;
    }
};

// First key at which two states disagree, scanning in canonical key order.
inline std::optional<QualifiedKey> first_disagreement(const ChainState& a, const ChainState& b) {
    std::set<QualifiedKey> keys = a.bound_keys();
    auto more = b.bound_keys();
    keys.insert(more.begin(), more.end());
    for (const auto& qk : keys)
        if (a.lookup(qk) != b.lookup(qk)) return qk;
    return std::nullopt;
}

struct SwapVerdict {
    bool swappable = true;
    // Set when refuted: a state where the two orders disagree, and the first
    // key they disagree on.
    std::optional<ChainState> witness;
    std::optional<QualifiedKey> differing_key;
};

// Do t then t_prime and its transposition agree on every state of the
// universe? The two transactions must differ; swapping a transaction with
// itself is not a meaningful question.
inline SwapVerdict oracle_swappable(const Transaction& t, const Transaction& t_prime,
                                    const StateUniverse& u, const ContractRegistry& reg) {
    if (t == t_prime)
        throw std::invalid_argument("oracle_swappable: transactions must differ");
    for (const auto& sigma : u.states) {
        ChainState ab = exec_tx(exec_tx(sigma, t, reg), t_prime, reg);
        ChainState ba = exec_tx(exec_tx(sigma, t_prime, reg), t, reg);
        if (ab != ba) {
            SwapVerdict v;
            v.swappable = false;
            v.witness = sigma;
            v.differing_key = first_disagreement(ab, ba);
            return v;
        }
    }
    return SwapVerdict{};
}

struct MazurkiewiczOptions {
    std::size_t max_block_len = 8;
};

struct MazurkiewiczResult {
    // All orderings reachable by swapping adjacent independent pairs,
    // the input included; canonically sorted.
    std::vector<Blockchain> blocks;
    bool bound_exceeded = false;
};

// Closure of a block under adjacent swaps of independent transactions.
// `indep` must be symmetric; a pair of equal transactions never swaps.
template <typename Indep>
MazurkiewiczResult mazurkiewicz_class(const Blockchain& b, Indep&& indep,
                                      MazurkiewiczOptions opts = {}) {
    MazurkiewiczResult out;
    if (b.size() > opts.max_block_len) {
        out.bound_exceeded = true;
        return out;
    }

    // Work over ids into a table of distinct transactions.
    std::vector<Transaction> table;
    std::vector<std::size_t> start;
    for (const auto& t : b) {
        auto it = std::find(table.begin(), table.end(), t);
        if (it == table.end()) {
            table.push_back(t);
            start.push_back(table.size() - 1);
        } else {
            start.push_back(static_cast<std::size_t>(it - table.begin()));
        }
    }
    std::vector<std::vector<bool>> ind(table.size(), std::vector<bool>(table.size(), false));
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table.size(); ++j)
            if (i != j) ind[i][j] = indep(table[i], table[j]);

    std::set<std::vector<std::size_t>> seen{start};
    std::vector<std::vector<std::size_t>> work{start};
    while (!work.empty()) {
        std::vector<std::size_t> cur = std::move(work.back());
        work.pop_back();
        for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
            if (!ind[cur[i]][cur[i + 1]]) continue;
            std::vector<std::size_t> next = cur;
            std::swap(next[i], next[i + 1]);
            if (seen.insert(next).second) work.push_back(next);
        }
    }
    for (const auto& ids : seen) {
        Blockchain chain;
        chain.reserve(ids.size());
        for (std::size_t id : ids) chain.push_back(table[id]);
        out.blocks.push_back(std::move(chain));
    }
    return out;
}

struct WriteApproxVerdict {
    bool safe = true;
    std::optional<ChainState> witness;
    std::optional<QualifiedKey> escaped_key;
};

// A write approximation is safe when no state in the universe lets the
// transaction change a key outside it. Checked directly on full-state diffs.
template <typename Covers>
WriteApproxVerdict check_safe_write_approx(const Transaction& t, Covers&& covers,
                                           const StateUniverse& u, const ContractRegistry& reg) {
    for (const auto& sigma : u.states) {
        StateUpdate delta = state_diff(exec_tx(sigma, t, reg), sigma);
        for (const auto& [qk, _] : delta.bindings()) {
            if (!covers(qk)) {
                WriteApproxVerdict v;
                v.safe = false;
                v.witness = sigma;
                v.escaped_key = qk;
                return v;
            }
        }
    }
    return WriteApproxVerdict{};
}

struct ReadApproxVerdict {
    bool safe = true;
    // Set when refuted: two read-agreeing states and a key they agreed on
    // whose post-states disagree.
    std::optional<ChainState> left, right;
    std::optional<QualifiedKey> disturbed_key;
};

// A read approximation is safe when states agreeing on it cannot be told
// apart through the transaction: any key the two states agree on, the two
// post-states agree on as well.
template <typename Covers>
ReadApproxVerdict check_safe_read_approx(const Transaction& t, Covers&& covers,
                                         const StateUniverse& u, const ContractRegistry& reg) {
    std::vector<ChainState> post;
    post.reserve(u.states.size());
    for (const auto& sigma : u.states) post.push_back(exec_tx(sigma, t, reg));

    for (std::size_t i = 0; i < u.states.size(); ++i) {
        for (std::size_t j = i + 1; j < u.states.size(); ++j) {
            if (!agrees_where(u.states[i], u.states[j], covers)) continue;
            std::set<QualifiedKey> candidates = u.states[i].bound_keys();
            for (const ChainState* s :
                 std::initializer_list<const ChainState*>{&u.states[j], &post[i], &post[j]}) {
                auto more = s->bound_keys();
                candidates.insert(more.begin(), more.end());
            }
            for (const auto& qk : candidates) {
                if (u.states[i].lookup(qk) != u.states[j].lookup(qk)) continue;
                if (post[i].lookup(qk) != post[j].lookup(qk)) {
                    ReadApproxVerdict v;
                    v.safe = false;
                    v.left = u.states[i];
                    v.right = u.states[j];
                    v.disturbed_key = qk;
                    return v;
                }
            }
        }
    }
    return ReadApproxVerdict{};
}

// Convenience coverage predicates.
inline auto covers_key_set(std::set<QualifiedKey> keys) {
    return [keys = std::move(keys)](const QualifiedKey& qk) { return keys.count(qk) != 0; };
}

}  // namespace txpar
