#include "txpar/analysis.hpp"
#include "txpar/equivalence.hpp"
#include "txpar/executor.hpp"
#include "txpar/fixtures.hpp"
#include "txpar/net.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace txpar;

namespace {

bool contains_all(const std::set<QualifiedKey>& sup, const std::set<QualifiedKey>& sub) {
    return std::includes(sup.begin(), sup.end(), sub.begin(), sub.end());
}

}  // namespace

TEST_CASE("fixture corpus lists the bundled scenarios") {
    CHECK(fixture_names() == std::vector<std::string>{"erc721-block", "sec2-oracle",
                                                      "sec2-transactions", "sec3-strong-swap",
                                                      "sec4-petri", "swap-not-strong"});
    CHECK_THROWS_AS(load_fixture("no-such-fixture"), IoError);
    CHECK(fixture_names("no-such-dir").empty());
}

TEST_CASE("every fixture meets its recorded expectations") {
    for (const auto& name : fixture_names()) {
        DYNAMIC_SECTION("fixture " << name) {
            const Fixture f = load_fixture(name);
            const ContractRegistry reg = f.registry();
            const ChainState initial = f.initial();
            const ChainState serial = exec_chain(initial, f.block, reg);

            // An expected unit value pins the key as unbound.
            for (const auto& [qk, want] : f.expect_state) {
                auto got = serial.lookup(qk);
                if (want.is_unit()) {
                    CHECK_FALSE(got.has_value());
                } else {
                    REQUIRE(got.has_value());
                    CHECK(*got == want);
                }
            }

            const IndexRelation rel = swap_relation(f.block, reg);
            if (f.expect_relation) CHECK(rel == *f.expect_relation);

            const Net net = build_net(f.block, symmetric_closure(rel));
            CHECK(validate_occurrence_net(net).valid);
            if (f.expect_order_places) CHECK(net.order_places() == *f.expect_order_places);
            if (f.expect_schedule) CHECK(greedy_maximal_schedule(net) == *f.expect_schedule);

            for (int workers : {1, 2, 4}) {
                ParallelOptions opt;
                opt.workers = workers;
                const ParallelResult r = exec_parallel(initial, f.block, reg, opt);
                CHECK(r.state == serial);
                CHECK(r.report.digest == state_digest(serial));
                CHECK(r.report.conflicts == 0);
                if (f.expect_schedule) CHECK(r.report.schedule == *f.expect_schedule);
            }

            std::map<std::size_t, StateUniverse> universes;
            for (const auto& oe : f.expect_oracle) {
                REQUIRE(oe.i >= 1);
                REQUIRE(oe.j <= f.block.size());
                auto it = universes.find(oe.depth);
                if (it == universes.end())
                    it = universes
                             .emplace(oe.depth, StateUniverse::bounded_reachable(
                                                    initial, f.block, reg, oe.depth))
                             .first;
                const SwapVerdict v =
                    oracle_swappable(f.block[oe.i - 1], f.block[oe.j - 1], it->second, reg);
                CHECK(v.swappable == oe.swappable);
            }
        }
    }
}

TEST_CASE("token block approximations contain the minimal rows and are safe") {
    const Fixture f = load_fixture("erc721-block");
    const ContractRegistry reg = f.registry();
    REQUIRE(f.block.size() == 4);

    const Address token = contract_addr("Token");
    auto tk = [&](const char* base, std::vector<Value> ix) {
        return QualifiedKey{token, CompositeKey{base, std::move(ix)}};
    };
    auto addr = [](const char* n) { return Value::address(account(n)); };
    auto num = [](int v) { return Value::integer(v); };

    std::vector<RWSets> rw;
    for (const auto& t : f.block) rw.push_back(tx_rw_sets(t, reg));
    for (const auto& sets : rw) {
        CHECK(sets.reads.top_contracts.empty());
        CHECK(sets.writes.top_contracts.empty());
        CHECK_FALSE(sets.reads.all_balances);
        CHECK_FALSE(sets.writes.all_balances);
    }

    // Minimal rows a path-sensitive reading would assign. The implemented
    // analysis ignores guard outcomes, so it may only add keys on top.
    const std::vector<std::set<QualifiedKey>> min_reads{
        {tk("exists", {num(1)}), tk("owner", {num(1)}), tk("balance", {addr("A")}),
         tk("balance", {addr("P")})},
        {},
        {tk("exists", {num(2)}), tk("owner", {num(2)}), tk("balance", {addr("A")}),
         tk("balance", {addr("Q")})},
        {tk("exists", {num(1)}), tk("owner", {num(1)}), tk("balance", {addr("P")}),
         tk("balance", {addr("B")})},
    };
    const std::vector<std::set<QualifiedKey>> min_writes{
        {tk("owner", {num(1)}), tk("balance", {addr("A")}), tk("balance", {addr("P")})},
        {tk("operatorApprovals", {addr("A"), addr("B")})},
        {tk("owner", {num(2)}), tk("balance", {addr("A")}), tk("balance", {addr("Q")})},
        {tk("owner", {num(1)}), tk("balance", {addr("P")}), tk("balance", {addr("B")})},
    };
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(contains_all(rw[i].reads.exact, min_reads[i]));
        CHECK(contains_all(rw[i].writes.exact, min_writes[i]));
    }

    // The exact computed sets: the approval guard key joins every transfer's
    // reads, and nothing else moves.
    CHECK(rw[0].reads.exact ==
          approx_union(KeyApprox::of(min_reads[0]),
                       KeyApprox::of({tk("operatorApprovals", {addr("A"), addr("A")})}))
              .exact);
    CHECK(rw[0].writes.exact == min_writes[0]);
    CHECK(rw[1].reads.exact.empty());
    CHECK(rw[1].writes.exact == min_writes[1]);
    CHECK(rw[2].reads.exact ==
          approx_union(KeyApprox::of(min_reads[2]),
                       KeyApprox::of({tk("operatorApprovals", {addr("A"), addr("B")})}))
              .exact);
    CHECK(rw[2].writes.exact == min_writes[2]);
    CHECK(rw[3].reads.exact ==
          approx_union(KeyApprox::of(min_reads[3]),
                       KeyApprox::of({tk("operatorApprovals", {addr("P"), addr("B")})}))
              .exact);
    CHECK(rw[3].writes.exact == min_writes[3]);

    REQUIRE(f.setup.size() == 2);
    RWSets mint = tx_rw_sets(f.setup[0], reg);
    CHECK(mint.reads.exact == std::set<QualifiedKey>{tk("exists", {num(1)}),
                                                     tk("balance", {addr("A")})});
    CHECK(mint.writes.exact == std::set<QualifiedKey>{tk("exists", {num(1)}),
                                                      tk("owner", {num(1)}),
                                                      tk("balance", {addr("A")})});

    const ChainState initial = f.initial();
    const StateUniverse u = StateUniverse::bounded_reachable(initial, f.block, reg, 3);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(check_safe_write_approx(f.block[i], covers_key_set(rw[i].writes.exact), u, reg)
                  .safe);
        CHECK(check_safe_read_approx(f.block[i], covers_key_set(rw[i].reads.exact), u, reg)
                  .safe);
    }
}

TEST_CASE("synthetic workloads drive the scheduler to its extremes") {
    auto [gi, bi] = independent_transfer_workload(6);
    const ContractRegistry regi = make_registry(gi);
    const ChainState si = initial_state(gi);
    CHECK(swap_relation(bi, regi).size() == 15);

    const ParallelResult ri = exec_parallel(si, bi, regi);
    CHECK(ri.report.schedule == std::vector<Step>{Step{1, 2, 3, 4, 5, 6}});
    CHECK(ri.state == exec_chain(si, bi, regi));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ri.state.balance(account("s" + std::to_string(i))) == 1);
        CHECK(ri.state.balance(account("r" + std::to_string(i))) == 1);
    }

    auto [gc, bc] = conflicting_transfer_workload(4);
    const ContractRegistry regc = make_registry(gc);
    const ChainState sc = initial_state(gc);
    CHECK(swap_relation(bc, regc).empty());

    const ParallelResult rc = exec_parallel(sc, bc, regc);
    CHECK(rc.report.schedule.size() == 4);
    CHECK(rc.state.balance(account("hub")) == 0);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(rc.state.balance(account("r" + std::to_string(i))) == 1);
}
