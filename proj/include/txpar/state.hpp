#pragma once

#include "txpar/value.hpp"

#include <openssl/evp.h>

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>

namespace txpar {

// Finite partial map from qualified keys to values. Updates only ever bind
// keys; there is no way to unbind one.
class StateUpdate {
  public:
    using Map = std::map<QualifiedKey, Value>;

    StateUpdate() = default;
    explicit StateUpdate(Map bindings) : bindings_(std::move(bindings)) {}

    void bind(QualifiedKey k, Value v) { bindings_[std::move(k)] = std::move(v); }

    std::optional<Value> get(const QualifiedKey& k) const {
        auto it = bindings_.find(k);
        if (it == bindings_.end()) return std::nullopt;
        return it->second;
    }

    const Map& bindings() const { return bindings_; }
    std::size_t size() const { return bindings_.size(); }
    bool empty() const { return bindings_.empty(); }

    friend bool operator==(const StateUpdate& a, const StateUpdate& b) {
        return a.bindings_ == b.bindings_;
    }

  private:
    Map bindings_;
};

struct BalanceUnderflow : std::runtime_error {
    explicit BalanceUnderflow(const std::string& what) : std::runtime_error(what) {}
};

// Total map from declared addresses to stores. Invariants: every store binds
// balance, balances are non-negative, account stores bind only balance.
class ChainState {
  public:
    using Store = std::map<CompositeKey, Value>;
    using Stores = std::map<Address, Store>;

    ChainState() = default;

    void declare(const Address& a, Int initial_balance = 0) {
        if (stores_.count(a)) throw std::invalid_argument("address already declared: " + a.name);
        if (initial_balance < 0) throw std::invalid_argument("negative balance for " + a.name);
        stores_[a][balance_key()] = Value::integer(std::move(initial_balance));
    }

    bool has_address(const Address& a) const { return stores_.count(a) != 0; }

    std::optional<Value> lookup(const QualifiedKey& qk) const {
        auto sit = stores_.find(qk.addr);
        if (sit == stores_.end()) return std::nullopt;
        auto kit = sit->second.find(qk.key);
        if (kit == sit->second.end()) return std::nullopt;
        return kit->second;
    }

    const Int& balance(const Address& a) const {
        auto sit = stores_.find(a);
        if (sit == stores_.end()) throw std::invalid_argument("unknown address: " + a.name);
        return sit->second.at(balance_key()).as_int();
    }

    void set(const QualifiedKey& qk, Value v) {
        auto sit = stores_.find(qk.addr);
        if (sit == stores_.end()) throw std::invalid_argument("unknown address: " + qk.addr.name);
        sit->second[qk.key] = std::move(v);
    }

    const Stores& stores() const { return stores_; }

    // Every key bound anywhere in the state, in canonical order.
    std::set<QualifiedKey> bound_keys() const {
        std::set<QualifiedKey> out;
        for (const auto& [addr, store] : stores_)
            for (const auto& [key, _] : store) out.insert(QualifiedKey{addr, key});
        return out;
    }

    Int total_balance() const {
        Int sum = 0;
        for (const auto& [addr, store] : stores_) sum += store.at(balance_key()).as_int();
        return sum;
    }

    // Holds by construction for states produced by execution; exposed so
    // tests can check hand-built states.
    bool invariants_hold() const {
        for (const auto& [addr, store] : stores_) {
            auto bit = store.find(balance_key());
            if (bit == store.end() || !bit->second.is_int()) return false;
            if (bit->second.as_int() < 0) return false;
            if (addr.kind == AddrKind::account && store.size() != 1) return false;
        }
        return true;
    }

    friend bool operator==(const ChainState& a, const ChainState& b) {
        return a.stores_ == b.stores_;
    }
    friend bool operator!=(const ChainState& a, const ChainState& b) { return !(a == b); }

  private:
    Stores stores_;
};

inline ChainState apply_update(const ChainState& sigma, const StateUpdate& pi) {
    ChainState out = sigma;
    for (const auto& [qk, v] : pi.bindings()) out.set(qk, v);
    return out;
}

// Underflow here means the caller failed to pre-check; execution rules never
// let a balance go negative.
inline ChainState adjust_balance(const ChainState& sigma, const Address& a, const Int& delta) {
    Int next = sigma.balance(a) + delta;
    if (next < 0)
        throw BalanceUnderflow("balance underflow at " + a.name + " (delta " + delta.str() + ")");
    ChainState out = sigma;
    out.set(balance_of(a), Value::integer(std::move(next)));
    return out;
}

// Merge is undefined when the operands bind a common key, even at equal
// values; the conflict lists every overlapping key.
struct MergeConflict {
    std::set<QualifiedKey> overlap;
};

using MergeResult = std::variant<StateUpdate, MergeConflict>;

inline MergeResult merge_updates(const StateUpdate& a, const StateUpdate& b) {
    std::set<QualifiedKey> overlap;
    for (const auto& [qk, _] : a.bindings())
        if (b.get(qk)) overlap.insert(qk);
    if (!overlap.empty()) return MergeConflict{std::move(overlap)};
    StateUpdate::Map merged = a.bindings();
    for (const auto& [qk, v] : b.bindings()) merged.emplace(qk, v);
    return StateUpdate{std::move(merged)};
}

// Least update turning before into after: exactly the keys whose value
// changed or became bound. Execution never unbinds a key, so a key bound in
// before and missing in after has no representation.
inline StateUpdate state_diff(const ChainState& after, const ChainState& before) {
    StateUpdate out;
    for (const auto& [addr, store] : after.stores()) {
        for (const auto& [key, v] : store) {
            auto prev = before.lookup(QualifiedKey{addr, key});
            if (!prev || !(*prev == v)) out.bind(QualifiedKey{addr, key}, v);
        }
    }
    for (const auto& [addr, store] : before.stores())
        for (const auto& [key, _] : store)
            if (!after.lookup(QualifiedKey{addr, key}))
                throw std::logic_error("state_diff: key unbound by after-state: " +
                                       encode_key(QualifiedKey{addr, key}));
    return out;
}

namespace detail {

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failure");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

}  // namespace detail

// Digest of the canonical text form; equal states digest equally because
// stores iterate in key order.
inline std::string state_digest(const ChainState& sigma) {
    std::string text;
    for (const auto& [addr, store] : sigma.stores()) {
        text += (addr.kind == AddrKind::contract) ? "c:" : "a:";
        text += addr.name;
        text += '\n';
        for (const auto& [key, v] : store) {
            text += "  ";
            text += encode_key(QualifiedKey{addr, key});
            text += '=';
            text += v.to_string();
            text += '\n';
        }
    }
    return detail::sha256_hex(text);
}

}  // namespace txpar
