#include "txpar/state.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace txpar;

namespace {

ChainState demo_state() {
    ChainState sigma;
    sigma.declare(account("A"), 2);
    sigma.declare(account("B"), 0);
    sigma.declare(contract_addr("cA"), 0);
    return sigma;
}

const QualifiedKey kX{contract_addr("cA"), CompositeKey{"x", {}}};

}  // namespace

TEST_CASE("values order and print") {
    CHECK(Value::integer(7).to_string() == "7");
    CHECK(Value::boolean(true).to_string() == "true");
    CHECK(Value::address(account("A")).to_string() == "A");
    CHECK(Value::unit().to_string() == "unit");
    CHECK(Value::integer(1) == Value::integer(1));
    CHECK(Value::integer(1) != Value::boolean(true));
    CHECK(Value::integer(Int("123456789012345678901234567890")).as_int() >
          Value::integer(1).as_int());
}

TEST_CASE("key encoding") {
    CHECK(encode_key(kX) == "cA.x");
    QualifiedKey approvals{contract_addr("Token"),
                           CompositeKey{"operatorApprovals",
                                        {Value::address(account("A")), Value::address(account("B"))}}};
    CHECK(encode_key(approvals) == "Token.operatorApprovals[A][B]");
    QualifiedKey owner{contract_addr("Token"), CompositeKey{"owner", {Value::integer(1)}}};
    CHECK(encode_key(owner) == "Token.owner[1]");
    CHECK(encode_key(balance_of(account("A"))) == "A.balance");
}

TEST_CASE("balance keys with indices are distinct from the native slot") {
    CompositeKey native = balance_key();
    CompositeKey mapping{"balance", {Value::address(account("A"))}};
    CHECK(is_balance_key(native));
    CHECK_FALSE(is_balance_key(mapping));
    CHECK_FALSE(native == mapping);
}

TEST_CASE("declared state binds balances and nothing else") {
    ChainState sigma = demo_state();
    CHECK(sigma.invariants_hold());
    CHECK(sigma.balance(account("A")) == 2);
    CHECK_FALSE(sigma.lookup(kX).has_value());
    CHECK(sigma.total_balance() == 2);
    CHECK_THROWS_AS(sigma.declare(account("A")), std::invalid_argument);
}

TEST_CASE("apply_update binds and overwrites") {
    ChainState sigma = demo_state();
    StateUpdate pi;
    pi.bind(kX, Value::integer(1));
    ChainState next = apply_update(sigma, pi);
    CHECK(next.lookup(kX) == Value::integer(1));
    CHECK_FALSE(sigma.lookup(kX).has_value());

    StateUpdate again;
    again.bind(kX, Value::integer(5));
    again.bind(balance_of(account("A")), Value::integer(0));
    ChainState third = apply_update(next, again);
    CHECK(third.lookup(kX) == Value::integer(5));
    CHECK(third.balance(account("A")) == 0);
}

TEST_CASE("adjust_balance moves value and rejects underflow") {
    ChainState sigma = demo_state();
    ChainState moved = adjust_balance(adjust_balance(sigma, account("A"), -2), account("B"), 2);
    CHECK(moved.balance(account("A")) == 0);
    CHECK(moved.balance(account("B")) == 2);
    CHECK(moved.total_balance() == sigma.total_balance());
    CHECK_THROWS_AS(adjust_balance(sigma, account("B"), -1), BalanceUnderflow);
    CHECK_THROWS_AS(adjust_balance(sigma, account("Z"), 1), std::invalid_argument);
}

TEST_CASE("merge_updates joins disjoint domains") {
    StateUpdate a, b;
    a.bind(kX, Value::integer(1));
    b.bind(balance_of(account("A")), Value::integer(0));
    auto merged = merge_updates(a, b);
    auto* ok = std::get_if<StateUpdate>(&merged);
    REQUIRE(ok != nullptr);
    CHECK(ok->size() == 2);
    CHECK(ok->get(kX) == Value::integer(1));

    SECTION("commutes") {
        auto flipped = merge_updates(b, a);
        REQUIRE(std::holds_alternative<StateUpdate>(flipped));
        CHECK(std::get<StateUpdate>(flipped) == *ok);
    }
    SECTION("empty update is neutral") {
        auto left = merge_updates(StateUpdate{}, a);
        REQUIRE(std::holds_alternative<StateUpdate>(left));
        CHECK(std::get<StateUpdate>(left) == a);
    }
}

TEST_CASE("merge_updates reports every overlapping key, equal values included") {
    StateUpdate a, b;
    a.bind(kX, Value::integer(1));
    a.bind(balance_of(account("A")), Value::integer(0));
    b.bind(kX, Value::integer(1));
    b.bind(balance_of(account("A")), Value::integer(2));
    auto merged = merge_updates(a, b);
    auto* conflict = std::get_if<MergeConflict>(&merged);
    REQUIRE(conflict != nullptr);
    CHECK(conflict->overlap ==
          std::set<QualifiedKey>{kX, balance_of(account("A"))});
}

TEST_CASE("state_diff is the least update between states") {
    ChainState before = demo_state();
    StateUpdate pi;
    pi.bind(kX, Value::integer(1));
    pi.bind(balance_of(account("B")), Value::integer(0));  // unchanged value
    ChainState after = apply_update(before, pi);

    StateUpdate least = state_diff(after, before);
    CHECK(least.size() == 1);
    CHECK(least.get(kX) == Value::integer(1));
    CHECK(apply_update(before, least) == after);
    CHECK(state_diff(before, before).empty());
}

TEST_CASE("state_digest separates states and ignores construction order") {
    ChainState a = demo_state();
    ChainState b = demo_state();
    CHECK(state_digest(a) == state_digest(b));

    StateUpdate pi;
    pi.bind(kX, Value::integer(1));
    CHECK(state_digest(apply_update(a, pi)) != state_digest(a));

    // Same bindings reached along different routes digest equally.
    StateUpdate one, two;
    one.bind(kX, Value::integer(1));
    two.bind(balance_of(account("B")), Value::integer(7));
    ChainState left = apply_update(apply_update(a, one), two);
    ChainState right = apply_update(apply_update(a, two), one);
    CHECK(left == right);
    CHECK(state_digest(left) == state_digest(right));
}

TEST_CASE("digest distinguishes index vectors") {
    ChainState sigma;
    sigma.declare(contract_addr("T"), 0);
    StateUpdate a, b;
    a.bind(QualifiedKey{contract_addr("T"), CompositeKey{"m", {Value::integer(1), Value::integer(2)}}},
           Value::integer(0));
    b.bind(QualifiedKey{contract_addr("T"), CompositeKey{"m", {Value::integer(12)}}},
           Value::integer(0));
    CHECK(state_digest(apply_update(sigma, a)) != state_digest(apply_update(sigma, b)));
}
