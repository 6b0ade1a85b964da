#pragma once

#include "txpar/ast.hpp"
#include "txpar/state.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace txpar {

// Reading a key the state does not bind yields Unbound, which is not yet a
// failure: numeric context coerces it to 0 and boolean context to false.
// Address context and assignment make it a Failure, which aborts the body.
struct Unbound {};
struct Failure {};

using EvalResult = std::variant<Value, Unbound, Failure>;

// Records every key written during a body run, same-value rewrites included.
using WriteLog = std::vector<QualifiedKey>;

namespace detail {

inline bool failed(const EvalResult& r) { return std::holds_alternative<Failure>(r); }

inline std::optional<Int> to_int(const EvalResult& r) {
    if (const auto* v = std::get_if<Value>(&r)) {
        if (v->is_int()) return v->as_int();
        return std::nullopt;
    }
    if (std::holds_alternative<Unbound>(r)) return Int(0);
    return std::nullopt;
}

inline std::optional<bool> to_bool(const EvalResult& r) {
    if (const auto* v = std::get_if<Value>(&r)) {
        if (v->is_bool()) return v->as_bool();
        return std::nullopt;
    }
    if (std::holds_alternative<Unbound>(r)) return false;
    return std::nullopt;
}

inline std::optional<Address> to_address(const EvalResult& r) {
    if (const auto* v = std::get_if<Value>(&r)) {
        if (v->is_address()) return v->as_address();
        return std::nullopt;
    }
    return std::nullopt;
}

// Equality across one unbound side follows the bound side's coercion; two
// unbound sides agree. Mismatched kinds fail rather than compare unequal.
inline EvalResult eval_equality(const EvalResult& a, const EvalResult& b, bool negated) {
    auto wrap = [&](bool eq) { return EvalResult{Value::boolean(negated ? !eq : eq)}; };
    if (failed(a) || failed(b)) return Failure{};
    bool ua = std::holds_alternative<Unbound>(a), ub = std::holds_alternative<Unbound>(b);
    if (ua && ub) return wrap(true);
    if (ua || ub) {
        const Value& bound = std::get<Value>(ua ? b : a);
        if (bound.is_int()) return wrap(bound.as_int() == 0);
        if (bound.is_bool()) return wrap(bound.as_bool() == false);
        return Failure{};
    }
    const Value& va = std::get<Value>(a);
    const Value& vb = std::get<Value>(b);
    if (va.is_int() && vb.is_int()) return wrap(va.as_int() == vb.as_int());
    if (va.is_bool() && vb.is_bool()) return wrap(va.as_bool() == vb.as_bool());
    if (va.is_address() && vb.is_address()) return wrap(va.as_address() == vb.as_address());
    return Failure{};
}

}  // namespace detail

EvalResult eval_expr(const Expr& e, const ChainState& sigma, const Env& rho, const Address& self);

// Evaluated form of a key expression; any index failure poisons the key.
inline std::optional<CompositeKey> eval_key(const KeyExpr& k, const ChainState& sigma,
                                            const Env& rho, const Address& self) {
    CompositeKey out{k.base, {}};
    out.indices.reserve(k.indices.size());
    for (const auto& ix : k.indices) {
        EvalResult r = eval_expr(*ix, sigma, rho, self);
        const auto* v = std::get_if<Value>(&r);
        if (!v) return std::nullopt;  // unbound or failed index
        out.indices.push_back(*v);
    }
    return out;
}

inline EvalResult eval_expr(const Expr& e, const ChainState& sigma, const Env& rho,
                            const Address& self) {
    struct V {
        const ChainState& sigma;
        const Env& rho;
        const Address& self;

        EvalResult operator()(const Expr::Lit& x) const { return x.v; }
        EvalResult operator()(const Expr::Param& x) const {
            auto it = rho.params.find(x.name);
            if (it == rho.params.end()) return Failure{};
            return it->second;
        }
        EvalResult operator()(const Expr::Sender&) const { return Value::address(rho.sender); }
        EvalResult operator()(const Expr::CallValue&) const {
            return Value::integer(rho.call_value);
        }
        EvalResult operator()(const Expr::Lookup& x) const {
            auto key = eval_key(x.key, sigma, rho, self);
            if (!key) return Failure{};
            auto v = sigma.lookup(QualifiedKey{self, *key});
            if (!v) return Unbound{};
            return *v;
        }
        EvalResult operator()(const Expr::Bin& x) const {
            EvalResult a = eval_expr(*x.lhs, sigma, rho, self);
            if (detail::failed(a)) return Failure{};
            switch (x.op) {
                case BinOp::land: {
                    auto ba = detail::to_bool(a);
                    if (!ba) return Failure{};
                    if (!*ba) return Value::boolean(false);
                    auto bb = detail::to_bool(eval_expr(*x.rhs, sigma, rho, self));
                    if (!bb) return Failure{};
                    return Value::boolean(*bb);
                }
                case BinOp::lor: {
                    auto ba = detail::to_bool(a);
                    if (!ba) return Failure{};
                    if (*ba) return Value::boolean(true);
                    auto bb = detail::to_bool(eval_expr(*x.rhs, sigma, rho, self));
                    if (!bb) return Failure{};
                    return Value::boolean(*bb);
                }
                default: break;
            }
            EvalResult b = eval_expr(*x.rhs, sigma, rho, self);
            if (detail::failed(b)) return Failure{};
            switch (x.op) {
                case BinOp::eq: return detail::eval_equality(a, b, false);
                case BinOp::ne: return detail::eval_equality(a, b, true);
                default: break;
            }
            auto ia = detail::to_int(a);
            auto ib = detail::to_int(b);
            if (!ia || !ib) return Failure{};
            switch (x.op) {
                case BinOp::add: return Value::integer(*ia + *ib);
                case BinOp::sub: return Value::integer(*ia - *ib);
                case BinOp::lt: return Value::boolean(*ia < *ib);
                case BinOp::le: return Value::boolean(*ia <= *ib);
                case BinOp::gt: return Value::boolean(*ia > *ib);
                case BinOp::ge: return Value::boolean(*ia >= *ib);
                default: return Failure{};
            }
        }
        EvalResult operator()(const Expr::Not& x) const {
            auto b = detail::to_bool(eval_expr(*x.arg, sigma, rho, self));
            if (!b) return Failure{};
            return Value::boolean(!*b);
        }
    };
    return std::visit(V{sigma, rho, self}, e.node);
}

namespace detail {

// Mutates the working copy; a false return means the body failed and the
// caller must discard the copy.
inline bool exec_stmt_into(const Stmt& s, ChainState& sigma, const Env& rho, const Address& self,
                           WriteLog* log) {
    struct V {
        ChainState& sigma;
        const Env& rho;
        const Address& self;
        WriteLog* log;

        bool operator()(const Stmt::Skip&) const { return true; }
        bool operator()(const Stmt::Throw&) const { return false; }
        bool operator()(const Stmt::Assign& x) const {
            auto key = eval_key(x.target, sigma, rho, self);
            if (!key) return false;
            EvalResult r = eval_expr(*x.value, sigma, rho, self);
            const auto* v = std::get_if<Value>(&r);
            if (!v) return false;  // assigning unbound or failed is a failure
            QualifiedKey qk{self, *key};
            sigma.set(qk, *v);
            if (log) log->push_back(std::move(qk));
            return true;
        }
        bool operator()(const Stmt::Seq& x) const {
            return exec_stmt_into(*x.first, sigma, rho, self, log) &&
                   exec_stmt_into(*x.second, sigma, rho, self, log);
        }
        bool operator()(const Stmt::If& x) const {
            auto c = to_bool(eval_expr(*x.cond, sigma, rho, self));
            if (!c) return false;
            return exec_stmt_into(*c ? *x.then_branch : *x.else_branch, sigma, rho, self, log);
        }
        bool operator()(const Stmt::Send& x) const {
            auto n = to_int(eval_expr(*x.amount, sigma, rho, self));
            if (!n || *n < 0) return false;
            auto to = to_address(eval_expr(*x.recipient, sigma, rho, self));
            if (!to || !sigma.has_address(*to)) return false;
            if (sigma.balance(self) < *n) return false;
            sigma = adjust_balance(sigma, self, -*n);
            sigma = adjust_balance(sigma, *to, *n);
            if (log) {
                log->push_back(balance_of(self));
                log->push_back(balance_of(*to));
            }
            return true;
        }
    };
    return std::visit(V{sigma, rho, self, log}, s.node);
}

}  // namespace detail

// Runs a body against a copy of sigma; empty result means the body threw or
// a send could not be covered, and the state is discarded.
inline std::optional<ChainState> exec_stmt(const Stmt& s, const ChainState& sigma, const Env& rho,
                                           const Address& self, WriteLog* log = nullptr) {
    ChainState work = sigma;
    if (!detail::exec_stmt_into(s, work, rho, self, log)) return std::nullopt;
    return work;
}

}  // namespace txpar
