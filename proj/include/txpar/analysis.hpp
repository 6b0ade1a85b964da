#pragma once

#include "txpar/ast.hpp"
#include "txpar/tx.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace txpar {

// An over-approximated key set in normal form: finitely many exact keys,
// whole stores of some contracts, and optionally the native balance slot of
// every address. Mixed forms arise, e.g. one non-static write plus a send to
// a known recipient.
struct KeyApprox {
    std::set<QualifiedKey> exact;
    std::set<Address> top_contracts;
    bool all_balances = false;

    static KeyApprox of(std::set<QualifiedKey> keys) { return KeyApprox{std::move(keys), {}, false}; }

    bool empty() const { return exact.empty() && top_contracts.empty() && !all_balances; }

    bool covers(const QualifiedKey& qk) const {
        if (exact.count(qk)) return true;
        if (top_contracts.count(qk.addr)) return true;
        return all_balances && is_balance_key(qk.key);
    }

    void add(QualifiedKey qk) { exact.insert(std::move(qk)); }
    void add_top(Address a) { top_contracts.insert(std::move(a)); }

    void merge(const KeyApprox& other) {
        exact.insert(other.exact.begin(), other.exact.end());
        top_contracts.insert(other.top_contracts.begin(), other.top_contracts.end());
        all_balances = all_balances || other.all_balances;
    }

    friend bool operator==(const KeyApprox& a, const KeyApprox& b) {
        return a.exact == b.exact && a.top_contracts == b.top_contracts &&
               a.all_balances == b.all_balances;
    }
};

inline KeyApprox approx_union(const KeyApprox& a, const KeyApprox& b) {
    KeyApprox out = a;
    out.merge(b);
    return out;
}

// Whether two approximations can share a key. Every address owns a native
// balance slot, so all_balances meets any non-empty store coverage.
inline bool approx_intersects(const KeyApprox& a, const KeyApprox& b) {
    for (const auto& qk : a.exact)
        if (b.covers(qk)) return true;
    for (const auto& qk : b.exact)
        if (a.covers(qk)) return true;
    for (const auto& c : a.top_contracts)
        if (b.top_contracts.count(c)) return true;
    if (a.all_balances && (b.all_balances || !b.top_contracts.empty())) return true;
    if (b.all_balances && !a.top_contracts.empty()) return true;
    return false;
}

struct RWSets {
    KeyApprox reads, writes;
};

// Template atoms: what a key index or send recipient is built from when it
// is statically visible. Anything else makes the template non-static.
struct ParamRef {
    std::size_t position;
};
struct SenderRef {};
struct CallValueRef {};
using IndexAtom = std::variant<Value, ParamRef, SenderRef, CallValueRef>;

struct KeyTemplate {
    std::string base;
    std::vector<IndexAtom> indices;
    bool is_static = true;  // false: indices unknown, covers the whole store
};

// Send recipient as far as the analysis can see.
struct RecipientTemplate {
    enum class Kind { literal, param, sender, non_static } kind;
    Address literal;        // kind == literal
    std::size_t position{};  // kind == param
};

// Per-function read/write shape with holes for sender, value and parameters.
struct SymbolicRW {
    std::vector<KeyTemplate> reads, writes;
    std::vector<RecipientTemplate> send_recipients;
    bool has_send = false;
};

namespace detail {

inline std::optional<std::size_t> param_position(const FunctionDef& fn, const std::string& name) {
    for (std::size_t i = 0; i < fn.params.size(); ++i)
        if (fn.params[i] == name) return i;
    return std::nullopt;
}

inline std::optional<IndexAtom> atomize(const Expr& e, const FunctionDef& fn) {
    if (const auto* lit = std::get_if<Expr::Lit>(&e.node)) return IndexAtom{lit->v};
    if (const auto* p = std::get_if<Expr::Param>(&e.node)) {
        if (auto pos = param_position(fn, p->name)) return IndexAtom{ParamRef{*pos}};
        return std::nullopt;  // unknown name, evaluation would fail anyway
    }
    if (std::holds_alternative<Expr::Sender>(e.node)) return IndexAtom{SenderRef{}};
    if (std::holds_alternative<Expr::CallValue>(e.node)) return IndexAtom{CallValueRef{}};
    return std::nullopt;
}

inline KeyTemplate template_of(const KeyExpr& k, const FunctionDef& fn) {
    KeyTemplate out{k.base, {}, true};
    for (const auto& ix : k.indices) {
        auto atom = atomize(*ix, fn);
        if (!atom) {
            out.indices.clear();
            out.is_static = false;
            return out;
        }
        out.indices.push_back(std::move(*atom));
    }
    return out;
}

void scan_expr(const Expr& e, const FunctionDef& fn, SymbolicRW& out);

inline void scan_key_indices(const KeyExpr& k, const FunctionDef& fn, SymbolicRW& out) {
    for (const auto& ix : k.indices) scan_expr(*ix, fn, out);
}

inline void scan_expr(const Expr& e, const FunctionDef& fn, SymbolicRW& out) {
    struct V {
        const FunctionDef& fn;
        SymbolicRW& out;
        void operator()(const Expr::Lit&) const {}
        void operator()(const Expr::Param&) const {}
        void operator()(const Expr::Sender&) const {}
        void operator()(const Expr::CallValue&) const {}
        void operator()(const Expr::Lookup& x) const {
            out.reads.push_back(template_of(x.key, fn));
            scan_key_indices(x.key, fn, out);
        }
        void operator()(const Expr::Bin& x) const {
            scan_expr(*x.lhs, fn, out);
            scan_expr(*x.rhs, fn, out);
        }
        void operator()(const Expr::Not& x) const { scan_expr(*x.arg, fn, out); }
    };
    std::visit(V{fn, out}, e.node);
}

inline void scan_stmt(const Stmt& s, const FunctionDef& fn, SymbolicRW& out) {
    struct V {
        const FunctionDef& fn;
        SymbolicRW& out;
        void operator()(const Stmt::Skip&) const {}
        void operator()(const Stmt::Throw&) const {}
        void operator()(const Stmt::Assign& x) const {
            out.writes.push_back(template_of(x.target, fn));
            scan_key_indices(x.target, fn, out);
            scan_expr(*x.value, fn, out);
        }
        void operator()(const Stmt::Seq& x) const {
            scan_stmt(*x.first, fn, out);
            scan_stmt(*x.second, fn, out);
        }
        void operator()(const Stmt::If& x) const {
            scan_expr(*x.cond, fn, out);
            scan_stmt(*x.then_branch, fn, out);
            scan_stmt(*x.else_branch, fn, out);
        }
        void operator()(const Stmt::Send& x) const {
            out.has_send = true;
            scan_expr(*x.amount, fn, out);
            scan_expr(*x.recipient, fn, out);
            RecipientTemplate r{RecipientTemplate::Kind::non_static, {}, 0};
            if (const auto* lit = std::get_if<Expr::Lit>(&x.recipient->node)) {
                if (lit->v.is_address()) {
                    r.kind = RecipientTemplate::Kind::literal;
                    r.literal = lit->v.as_address();
                }
                // A non-address literal recipient always fails the send, so
                // the transaction is a no-op and contributes no writes.
                else {
                    return;
                }
            } else if (const auto* p = std::get_if<Expr::Param>(&x.recipient->node)) {
                if (auto pos = param_position(fn, p->name)) {
                    r.kind = RecipientTemplate::Kind::param;
                    r.position = *pos;
                }
            } else if (std::holds_alternative<Expr::Sender>(x.recipient->node)) {
                r.kind = RecipientTemplate::Kind::sender;
            }
            out.send_recipients.push_back(std::move(r));
        }
    };
    std::visit(V{fn, out}, s.node);
}

}  // namespace detail

// Both branches of every conditional contribute, so the result covers every
// path the body could take.
inline SymbolicRW analyze_function(const FunctionDef& fn) {
    SymbolicRW out;
    detail::scan_stmt(*fn.body, fn, out);
    return out;
}

namespace detail {

inline std::optional<Value> instantiate_atom(const IndexAtom& atom, const Transaction& t) {
    if (const auto* v = std::get_if<Value>(&atom)) return *v;
    if (const auto* p = std::get_if<ParamRef>(&atom)) return t.args[p->position];
    if (std::holds_alternative<SenderRef>(atom)) return Value::address(t.sender);
    return Value::integer(t.value);
}

inline void instantiate_templates(const std::vector<KeyTemplate>& templates, const Transaction& t,
                                  KeyApprox& out) {
    for (const auto& tpl : templates) {
        if (!tpl.is_static) {
            out.add_top(t.callee);
            continue;
        }
        CompositeKey key{tpl.base, {}};
        key.indices.reserve(tpl.indices.size());
        for (const auto& atom : tpl.indices) key.indices.push_back(*instantiate_atom(atom, t));
        out.add(QualifiedKey{t.callee, std::move(key)});
    }
}

}  // namespace detail

// Static read/write sets of one transaction: the callee's function template
// instantiated with the actual sender, value and arguments, plus the call
// transfer's balance keys. An unresolvable call gets the whole callee store
// on both sides.
inline RWSets tx_rw_sets(const Transaction& t, const ContractRegistry& reg) {
    RWSets out;
    const FunctionDef* fn = reg.resolve(t.callee, t.function, t.args.size());
    if (!fn) {
        out.reads.add_top(t.callee);
        out.writes.add_top(t.callee);
        if (t.value > 0) {
            out.reads.add(balance_of(t.sender));
            out.writes.add(balance_of(t.sender));
        }
        return out;
    }

    SymbolicRW sym = analyze_function(*fn);
    detail::instantiate_templates(sym.reads, t, out.reads);
    detail::instantiate_templates(sym.writes, t, out.writes);

    if (sym.has_send) {
        out.reads.add(balance_of(t.callee));
        out.writes.add(balance_of(t.callee));
    }
    for (const auto& r : sym.send_recipients) {
        switch (r.kind) {
            case RecipientTemplate::Kind::literal: out.writes.add(balance_of(r.literal)); break;
            case RecipientTemplate::Kind::sender: out.writes.add(balance_of(t.sender)); break;
            case RecipientTemplate::Kind::param: {
                const Value& arg = t.args[r.position];
                // A non-address argument makes every run of this send fail,
                // which reverts the transaction; nothing escapes.
                if (arg.is_address()) out.writes.add(balance_of(arg.as_address()));
                break;
            }
            case RecipientTemplate::Kind::non_static: out.writes.all_balances = true; break;
        }
    }
    if (t.value > 0) {
        out.reads.add(balance_of(t.sender));
        out.writes.add(balance_of(t.sender));
        out.writes.add(balance_of(t.callee));
    }
    return out;
}

// Bernstein-style disjointness on the static approximations: neither
// transaction writes anything the other reads or writes. Equal transactions
// are never swappable.
inline bool strongly_swappable(const Transaction& t, const Transaction& t_prime,
                               const ContractRegistry& reg) {
    if (t == t_prime) return false;
    RWSets a = tx_rw_sets(t, reg);
    RWSets b = tx_rw_sets(t_prime, reg);
    return !approx_intersects(approx_union(a.reads, a.writes), b.writes) &&
           !approx_intersects(approx_union(b.reads, b.writes), a.writes);
}

// All unordered position pairs (1-based, i < j) whose transactions are
// strongly swappable. Symmetric and irreflexive by construction. The per-
// transaction approximations are computed once, not per pair.
inline std::set<std::pair<std::size_t, std::size_t>> swap_relation(const Blockchain& b,
                                                                   const ContractRegistry& reg) {
    std::vector<KeyApprox> writes, touched;
    writes.reserve(b.size());
    touched.reserve(b.size());
    for (const auto& t : b) {
        RWSets rw = tx_rw_sets(t, reg);
        touched.push_back(approx_union(rw.reads, rw.writes));
        writes.push_back(std::move(rw.writes));
    }
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i + 1; j < b.size(); ++j)
            if (!(b[i] == b[j]) && !approx_intersects(touched[i], writes[j]) &&
                !approx_intersects(touched[j], writes[i]))
                out.emplace(i + 1, j + 1);
    return out;
}

}  // namespace txpar
