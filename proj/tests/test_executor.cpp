#include "txpar/executor.hpp"
#include "txpar/parser.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace txpar;

namespace {

const char* kStepSrc =
    "contract cA {"
    "  fun f() { if !x = 0 then y := 1 else throw }"
    "  fun g() { if !y = 0 then x := 1 else throw }"
    "  fun h() { z := 1 }"
    "  fun inc() { k := !k + 1 }"
    "  fun rezero() { x := 0 }"
    "}";

const char* kWalletSrc =
    "contract cA {"
    "  fun f0() { x := 1 }"
    "  fun f1() { if !x = 0 then send(1, @B) }"
    "  fun f2() { send(1, @B) }"
    "}";

QualifiedKey ck(const char* base) {
    return QualifiedKey{contract_addr("cA"), CompositeKey{base, {}}};
}

Transaction call(const char* snd, const char* fn, Int value = 0) {
    return Transaction{account(snd), contract_addr("cA"), fn, std::move(value), {}};
}

struct World {
    ContractRegistry reg;
    ChainState sigma;
};

// x and y start at zero as in the worked step-semantics example; z and k
// stay unbound until written.
World step_world() {
    Genesis g;
    g.balances = {{account("A"), 10}, {account("B"), 10}, {contract_addr("cA"), 0}};
    g.contracts = {parse_contract(kStepSrc)};
    World w{make_registry(g), initial_state(g)};
    w.sigma.set(ck("x"), Value::integer(0));
    w.sigma.set(ck("y"), Value::integer(0));
    return w;
}

World wallet_world(Int a_balance = 2) {
    Genesis g;
    g.balances = {{account("A"), std::move(a_balance)},
                  {account("B"), 0},
                  {contract_addr("cA"), 0}};
    g.contracts = {parse_contract(kWalletSrc)};
    return World{make_registry(g), initial_state(g)};
}

}  // namespace

TEST_CASE("least collector binds exactly the changed keys") {
    World w = step_world();
    StateUpdate uf = collect_least(w.sigma, call("A", "f"), w.reg);
    CHECK(uf.size() == 1);
    CHECK(uf.get(ck("y")) == Value::integer(1));

    StateUpdate uh = collect_least(w.sigma, call("A", "h"), w.reg);
    CHECK(uh.size() == 1);
    CHECK(uh.get(ck("z")) == Value::integer(1));

    // A failing call leaves the state alone, so its least update is empty.
    ChainState after_f = exec_tx(w.sigma, call("A", "f"), w.reg);
    CHECK(collect_least(after_f, call("A", "g"), w.reg).empty());
    CHECK(collect_least(w.sigma, call("A", "nope"), w.reg).empty());

    // Rewriting a key with its current value changes nothing.
    CHECK(collect_least(w.sigma, call("A", "rezero"), w.reg).empty());
}

TEST_CASE("instrumented collector records rewrites and transfers") {
    World w = step_world();
    StateUpdate u = collect_instrumented(w.sigma, call("A", "rezero"), w.reg);
    CHECK(u.size() == 1);
    CHECK(u.get(ck("x")) == Value::integer(0));

    StateUpdate pay = collect_instrumented(w.sigma, call("A", "h", 3), w.reg);
    CHECK(pay.get(balance_of(account("A"))) == Value::integer(7));
    CHECK(pay.get(balance_of(contract_addr("cA"))) == Value::integer(3));
    CHECK(pay.get(ck("z")) == Value::integer(1));

    ChainState after_f = exec_tx(w.sigma, call("A", "f"), w.reg);
    CHECK(collect_instrumented(after_f, call("A", "g"), w.reg).empty());
}

TEST_CASE("both collectors replay the transaction, least is the smaller") {
    World w = step_world();
    for (const auto& t : {call("A", "f"), call("A", "g"), call("B", "h", 2),
                          call("A", "inc"), call("A", "rezero"), call("A", "nope", 1)}) {
        ChainState direct = exec_tx(w.sigma, t, w.reg);
        for (CollectorKind kind : {CollectorKind::least, CollectorKind::instrumented}) {
            StateUpdate u = collect_update(kind, w.sigma, t, w.reg);
            CHECK(apply_update(w.sigma, u) == direct);
        }
        StateUpdate least = collect_least(w.sigma, t, w.reg);
        StateUpdate inst = collect_instrumented(w.sigma, t, w.reg);
        for (const auto& [qk, val] : least.bindings()) CHECK(inst.get(qk) == val);
    }
}

TEST_CASE("steps execute against one snapshot and merge") {
    World w = step_world();
    Blockchain block{call("A", "f"), call("A", "h"), call("A", "g")};

    ChainState fh = exec_step(w.sigma, {block[0], block[1]}, w.reg);
    CHECK(fh.lookup(ck("y")) == Value::integer(1));
    CHECK(fh.lookup(ck("z")) == Value::integer(1));
    CHECK(fh.lookup(ck("x")) == Value::integer(0));

    ChainState gh = exec_step(w.sigma, {block[2], block[1]}, w.reg);
    CHECK(gh.lookup(ck("x")) == Value::integer(1));
    CHECK(gh.lookup(ck("z")) == Value::integer(1));

    // Both guards read the snapshot, so both writes land; no serial order
    // of the two calls produces this state.
    ChainState fg = exec_step(w.sigma, {block[0], block[2]}, w.reg);
    CHECK(fg.lookup(ck("y")) == Value::integer(1));
    CHECK(fg.lookup(ck("x")) == Value::integer(1));
    ChainState serial_fg = exec_chain(w.sigma, {block[0], block[2]}, w.reg);
    ChainState serial_gf = exec_chain(w.sigma, {block[2], block[0]}, w.reg);
    CHECK(fg != serial_fg);
    CHECK(fg != serial_gf);

    ChainState single = exec_step(w.sigma, {block[0]}, w.reg);
    CHECK(single == exec_tx(w.sigma, block[0], w.reg));

    for (unsigned workers : {1u, 4u})
        CHECK(exec_step(w.sigma, {block[0], block[1]}, w.reg, CollectorKind::least, workers) ==
              fh);
}

TEST_CASE("overlapping updates in one step raise a conflict") {
    World w = step_world();
    Transaction a = call("A", "inc");
    Transaction b = call("B", "inc");
    try {
        exec_step(w.sigma, {a, b}, w.reg);
        FAIL("increments of one key must conflict");
    } catch (const ConflictError& e) {
        CHECK(e.first == a);
        CHECK(e.second == b);
        CHECK(e.overlap == std::set<QualifiedKey>{ck("k")});
    }

    // The least collector sees two no-op rewrites; the instrumented one
    // sees two writes of the same key.
    Transaction ra = call("A", "rezero");
    Transaction rb = call("B", "rezero");
    CHECK(exec_step(w.sigma, {ra, rb}, w.reg, CollectorKind::least) == w.sigma);
    CHECK_THROWS_AS(exec_step(w.sigma, {ra, rb}, w.reg, CollectorKind::instrumented),
                    ConflictError);
}

TEST_CASE("step sequences fold to the serial state") {
    World w = step_world();
    Blockchain block{call("A", "f"), call("A", "h"), call("A", "g")};

    ChainState stepped = exec_step_sequence(w.sigma, block, {{1, 2}, {3}}, w.reg);
    ChainState serial = exec_chain(w.sigma, block, w.reg);
    CHECK(stepped == serial);
    CHECK(stepped.lookup(ck("y")) == Value::integer(1));
    CHECK(stepped.lookup(ck("z")) == Value::integer(1));
    CHECK(stepped.lookup(ck("x")) == Value::integer(0));

    CHECK(exec_step_sequence(w.sigma, block, {}, w.reg) == w.sigma);
    CHECK(exec_step_sequence(w.sigma, block, {{1}, {2}, {3}}, w.reg) == serial);
    CHECK_THROWS_AS(exec_step_sequence(w.sigma, block, {{4}}, w.reg), std::invalid_argument);
}

TEST_CASE("the parallel pipeline matches serial execution") {
    World w = step_world();
    Blockchain block{call("A", "f"), call("A", "h"), call("A", "g")};
    ChainState serial = exec_chain(w.sigma, block, w.reg);

    for (unsigned workers : {1u, 2u}) {
        ParallelResult run = exec_parallel(w.sigma, block, w.reg, {workers});
        CHECK(run.state == serial);
        CHECK(run.report.schedule == std::vector<Step>{{1, 2}, {3}});
        CHECK(run.report.digest == state_digest(serial));
        CHECK(run.report.conflicts == 0);
        REQUIRE(run.report.update_sizes.size() == 2);
        CHECK(run.report.update_sizes[0] == std::vector<std::size_t>{1, 1});
        CHECK(run.report.update_sizes[1] == std::vector<std::size_t>{0});
    }

    ParallelOptions narrow{2, true};
    ParallelResult limited = exec_parallel(w.sigma, block, w.reg, narrow);
    CHECK(limited.state == serial);

    ParallelOptions instrumented{2, false, CollectorKind::instrumented};
    CHECK(exec_parallel(w.sigma, block, w.reg, instrumented).state == serial);

    // Pairwise-conflicting blocks degrade to singleton steps.
    Blockchain incs{call("A", "inc"), call("B", "inc"), call("C", "inc")};
    w.sigma.declare(account("C"), 1);
    ParallelResult serial_only = exec_parallel(w.sigma, incs, w.reg, {4});
    CHECK(serial_only.report.schedule == std::vector<Step>{{1}, {2}, {3}});
    CHECK(serial_only.state == exec_chain(w.sigma, incs, w.reg));

    CHECK_THROWS_AS(exec_parallel(w.sigma, block, w.reg, {0}), std::invalid_argument);
}

TEST_CASE("validators accept honest digests and reject tampered orders") {
    World w = wallet_world();
    Blockchain block{call("A", "f0"), call("A", "f1", 1), call("A", "f2", 1)};
    std::string honest = state_digest(exec_chain(w.sigma, block, w.reg));

    ValidationOutcome ok = validate_block(w.sigma, block, w.reg, honest, {2});
    CHECK(ok.ok);
    CHECK(ok.actual == honest);

    Blockchain tampered{block[1], block[0], block[2]};
    ValidationOutcome bad = validate_block(w.sigma, tampered, w.reg, honest, {2});
    CHECK_FALSE(bad.ok);
    CHECK(bad.expected == honest);
    CHECK(bad.actual != honest);
}

TEST_CASE("the greedy reorder policy front-loads independent transactions") {
    World w = step_world();
    Blockchain block{call("A", "f"), call("A", "g"), call("A", "h")};
    Blockchain reordered = reorder_greedy_parallel(block, w.reg);
    REQUIRE(reordered.size() == 3);
    CHECK(reordered[0] == block[0]);
    CHECK(reordered[1] == block[2]);  // h joins f's round
    CHECK(reordered[2] == block[1]);

    // Policy changes the order, never the multiset.
    Blockchain sorted_in = block, sorted_out = reordered;
    std::sort(sorted_in.begin(), sorted_in.end());
    std::sort(sorted_out.begin(), sorted_out.end());
    CHECK(sorted_in == sorted_out);

    ParallelResult run = exec_parallel(w.sigma, reordered, w.reg, {2});
    CHECK(run.report.schedule == std::vector<Step>{{1, 2}, {3}});
}
