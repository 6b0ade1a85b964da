#pragma once

#include "txpar/ast.hpp"
#include "txpar/interp.hpp"
#include "txpar/state.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace txpar {

// A signed call: sender pays `value` into callee and runs callee.function.
struct Transaction {
    Address sender;
    Address callee;
    std::string function;
    Int value;
    std::vector<Value> args;

    friend bool operator==(const Transaction& a, const Transaction& b) {
        return a.sender == b.sender && a.callee == b.callee && a.function == b.function &&
               a.value == b.value && a.args == b.args;
    }
    friend bool operator!=(const Transaction& a, const Transaction& b) { return !(a == b); }
    friend bool operator<(const Transaction& a, const Transaction& b) {
        auto key = [](const Transaction& t) {
            return std::tie(t.sender, t.callee, t.function, t.value, t.args);
        };
        return key(a) < key(b);
    }

    std::string to_string() const {
        std::ostringstream out;
        out << sender.name << " --" << value << ":" << callee.name << '.' << function << '(';
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i) out << ", ";
            out << args[i].to_string();
        }
        out << ")";
        return out.str();
    }
};

using Blockchain = std::vector<Transaction>;

// Deployment-time description of a chain: initial balances plus the
// contracts installed at contract addresses.
struct Genesis {
    std::map<Address, Int> balances;
    std::vector<Contract> contracts;
};

// Account addresses carry a single parameterless function that skips, so a
// plain transfer is a call like any other.
inline const FunctionDef& account_skip_function() {
    static const FunctionDef fn{"skip", {}, make_stmt(Stmt::Skip{})};
    return fn;
}

class ContractRegistry {
  public:
    ContractRegistry() = default;

    void add(Contract c) {
        auto [it, fresh] = contracts_.emplace(c.addr, std::move(c));
        if (!fresh)
            throw std::invalid_argument("contract already registered at " + it->first.name);
    }

    const Contract* find(const Address& a) const {
        auto it = contracts_.find(a);
        return it == contracts_.end() ? nullptr : &it->second;
    }

    // Resolves the body a transaction would run; null when the callee has no
    // such function or the argument count differs.
    const FunctionDef* resolve(const Address& callee, const std::string& function,
                               std::size_t argc) const {
        const FunctionDef* fn = nullptr;
        if (const Contract* c = find(callee)) {
            auto it = c->functions.find(function);
            if (it != c->functions.end()) fn = &it->second;
        } else {
            if (function == account_skip_function().name) fn = &account_skip_function();
        }
        if (!fn || fn->params.size() != argc) return nullptr;
        return fn;
    }

    const std::map<Address, Contract>& contracts() const { return contracts_; }

  private:
    std::map<Address, Contract> contracts_;
};

inline ContractRegistry make_registry(const Genesis& g) {
    ContractRegistry reg;
    for (const auto& c : g.contracts) reg.add(c);
    return reg;
}

// Initial state: every declared address with its balance. An address kind
// comes from whether a contract is installed there, not from how the balance
// entry was spelled; contracts must appear in the balance map.
inline ChainState initial_state(const Genesis& g) {
    std::map<std::string, bool> is_contract;
    for (const auto& c : g.contracts) {
        if (!is_contract.emplace(c.addr.name, true).second)
            throw std::invalid_argument("duplicate contract address " + c.addr.name);
    }
    ChainState sigma;
    for (const auto& [addr, bal] : g.balances)
        sigma.declare(is_contract.count(addr.name) ? contract_addr(addr.name) : addr, bal);
    for (const auto& c : g.contracts) {
        if (!sigma.has_address(c.addr))
            throw std::invalid_argument("contract " + c.addr.name + " missing from balances");
    }
    return sigma;
}

// Total semantics of one transaction: when the sender cannot cover the value,
// the callee or function is unknown, or the body throws, the transaction is
// a no-op and sigma is returned unchanged.
inline ChainState exec_tx(const ChainState& sigma, const Transaction& t,
                          const ContractRegistry& reg, WriteLog* log = nullptr) {
    if (!sigma.has_address(t.sender) || !sigma.has_address(t.callee)) return sigma;
    if (t.value < 0 || sigma.balance(t.sender) < t.value) return sigma;
    const FunctionDef* fn = reg.resolve(t.callee, t.function, t.args.size());
    if (!fn) return sigma;

    ChainState work = sigma;
    WriteLog local;
    if (t.value != 0) {
        work = adjust_balance(work, t.sender, -t.value);
        work = adjust_balance(work, t.callee, t.value);
        local.push_back(balance_of(t.sender));
        local.push_back(balance_of(t.callee));
    }
    Env rho{t.sender, t.value, {}};
    for (std::size_t i = 0; i < fn->params.size(); ++i) rho.params[fn->params[i]] = t.args[i];

    auto out = exec_stmt(*fn->body, work, rho, t.callee, &local);
    if (!out) return sigma;
    if (log) log->insert(log->end(), local.begin(), local.end());
    return *out;
}

inline ChainState exec_chain(const ChainState& sigma, const Blockchain& b,
                             const ContractRegistry& reg) {
    ChainState out = sigma;
    for (const auto& t : b) out = exec_tx(out, t, reg);
    return out;
}

}  // namespace txpar
