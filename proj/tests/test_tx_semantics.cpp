#include "txpar/parser.hpp"
#include "txpar/tx.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace txpar;

namespace {

const char* kWalletSrc =
    "contract cA {"
    "  fun f0() { x := 1 }"
    "  fun f1() { if !x = 0 then send(1, @B) }"
    "  fun f2() { send(1, @B) }"
    "}";

Genesis wallet_genesis() {
    Genesis g;
    g.balances = {{account("A"), 2}, {account("B"), 0}, {contract_addr("cA"), 0}};
    g.contracts = {parse_contract(kWalletSrc)};
    return g;
}

const Transaction kT0{account("A"), contract_addr("cA"), "f0", 0, {}};
const Transaction kT1{account("A"), contract_addr("cA"), "f1", 1, {}};
const Transaction kT2{account("A"), contract_addr("cA"), "f2", 1, {}};

const QualifiedKey kX{contract_addr("cA"), CompositeKey{"x", {}}};

}  // namespace

TEST_CASE("initial_state declares funded addresses with contract kinds") {
    Genesis g = wallet_genesis();
    ChainState sigma = initial_state(g);
    CHECK(sigma.invariants_hold());
    CHECK(sigma.balance(account("A")) == 2);
    CHECK(sigma.stores().find(contract_addr("cA"))->first.kind == AddrKind::contract);
    CHECK(sigma.stores().find(account("A"))->first.kind == AddrKind::account);

    SECTION("contract without a balance entry is rejected") {
        g.balances.erase(contract_addr("cA"));
        CHECK_THROWS_AS(initial_state(g), std::invalid_argument);
    }
    SECTION("duplicate contract deployment is rejected") {
        g.contracts.push_back(parse_contract("contract cA { fun n() { skip } }"));
        CHECK_THROWS_AS(initial_state(g), std::invalid_argument);
        CHECK_THROWS_AS(make_registry(g), std::invalid_argument);
    }
}

TEST_CASE("successful calls pay the value in before the body runs") {
    Genesis g = wallet_genesis();
    ChainState sigma = initial_state(g);
    ContractRegistry reg = make_registry(g);

    ChainState after0 = exec_tx(sigma, kT0, reg);
    CHECK(after0.lookup(kX) == Value::integer(1));
    CHECK(after0.balance(account("A")) == 2);

    ChainState after1 = exec_tx(after0, kT1, reg);
    // x is already 1, so the body skips and only the call transfer remains.
    CHECK(after1.balance(account("A")) == 1);
    CHECK(after1.balance(contract_addr("cA")) == 1);
    CHECK(after1.balance(account("B")) == 0);

    ChainState after2 = exec_tx(after1, kT2, reg);
    CHECK(after2.balance(account("A")) == 0);
    CHECK(after2.balance(account("B")) == 1);
    CHECK(after2.balance(contract_addr("cA")) == 1);
    CHECK(after2.lookup(kX) == Value::integer(1));
}

TEST_CASE("exec_chain folds transactions left to right") {
    Genesis g = wallet_genesis();
    ChainState sigma = initial_state(g);
    ContractRegistry reg = make_registry(g);

    ChainState all = exec_chain(sigma, {kT0, kT1, kT2}, reg);
    CHECK(all == exec_tx(exec_tx(exec_tx(sigma, kT0, reg), kT1, reg), kT2, reg));
    CHECK(all.total_balance() == sigma.total_balance());
    CHECK(exec_chain(sigma, {}, reg) == sigma);

    // A different order is a different state: T1's guard sees x before T0.
    ChainState swapped = exec_chain(sigma, {kT1, kT0, kT2}, reg);
    CHECK(swapped != all);
    CHECK(swapped.balance(account("B")) == 2);
}

TEST_CASE("failing transactions are complete no-ops") {
    Genesis g = wallet_genesis();
    g.contracts.push_back(
        parse_contract("contract cT { fun boom() { k := 1; throw } fun pay(n) { send(n, @B) } }"));
    g.balances[contract_addr("cT")] = 0;
    ChainState sigma = initial_state(g);
    ContractRegistry reg = make_registry(g);

    SECTION("insufficient sender balance") {
        Transaction t{account("B"), contract_addr("cA"), "f2", 1, {}};
        CHECK(exec_tx(sigma, t, reg) == sigma);
    }
    SECTION("negative value") {
        Transaction t{account("A"), contract_addr("cA"), "f0", -1, {}};
        CHECK(exec_tx(sigma, t, reg) == sigma);
    }
    SECTION("unknown callee, unknown function, wrong arity") {
        CHECK(exec_tx(sigma, Transaction{account("A"), contract_addr("cZ"), "f0", 0, {}}, reg) ==
              sigma);
        CHECK(exec_tx(sigma, Transaction{account("A"), contract_addr("cA"), "f9", 0, {}}, reg) ==
              sigma);
        CHECK(exec_tx(sigma, Transaction{account("A"), contract_addr("cA"), "f0", 0,
                                         {Value::integer(1)}},
                      reg) == sigma);
    }
    SECTION("throwing body reverts the call transfer too") {
        Transaction t{account("A"), contract_addr("cT"), "boom", 2, {}};
        ChainState out = exec_tx(sigma, t, reg);
        CHECK(out == sigma);
        CHECK_FALSE(out.lookup(QualifiedKey{contract_addr("cT"), CompositeKey{"k", {}}}));
    }
    SECTION("body send beyond the callee balance reverts") {
        Transaction t{account("A"), contract_addr("cT"), "pay", 1, {Value::integer(5)}};
        CHECK(exec_tx(sigma, t, reg) == sigma);
    }
}

TEST_CASE("account callees accept plain transfers via skip") {
    Genesis g = wallet_genesis();
    ChainState sigma = initial_state(g);
    ContractRegistry reg = make_registry(g);

    Transaction transfer{account("A"), account("B"), "skip", 2, {}};
    ChainState out = exec_tx(sigma, transfer, reg);
    CHECK(out.balance(account("A")) == 0);
    CHECK(out.balance(account("B")) == 2);
    CHECK(out.invariants_hold());

    // Only the skip entry point exists on accounts.
    CHECK(exec_tx(sigma, Transaction{account("A"), account("B"), "pay", 2, {}}, reg) == sigma);
    CHECK(exec_tx(sigma, Transaction{account("A"), account("B"), "skip", 2, {Value::integer(1)}},
                  reg) == sigma);
}

TEST_CASE("total balance is conserved across arbitrary blocks") {
    Genesis g = wallet_genesis();
    ChainState sigma = initial_state(g);
    ContractRegistry reg = make_registry(g);
    Blockchain block = {kT2, kT2, kT0, kT1, kT2, kT1, kT0};
    ChainState out = exec_chain(sigma, block, reg);
    CHECK(out.total_balance() == sigma.total_balance());
    CHECK(out.invariants_hold());
}

TEST_CASE("transaction display form") {
    CHECK(kT1.to_string() == "A --1:cA.f1()");
    Transaction t{account("B"), contract_addr("Token"), "transferFrom", 0,
                  {Value::address(account("P")), Value::address(account("B")), Value::integer(1)}};
    CHECK(t.to_string() == "B --0:Token.transferFrom(P, B, 1)");
}
