#pragma once

#include "txpar/io.hpp"
#include "txpar/net.hpp"
#include "txpar/tx.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace txpar {

struct OracleExpectation {
    std::size_t i{};
    std::size_t j{};
    bool swappable{};
    std::size_t depth{3};
};

// A worked scenario: inputs plus machine-checkable expectations. Absent
// expectations mean the fixture makes no claim there. An expected value
// of unit asserts the key is unbound in the final state.
struct Fixture {
    std::string name;
    Genesis genesis;
    std::vector<std::pair<QualifiedKey, Value>> initial_keys;
    Blockchain setup;
    Blockchain block;

    std::vector<std::pair<QualifiedKey, Value>> expect_state;
    std::optional<IndexRelation> expect_relation;
    std::optional<IndexRelation> expect_order_places;
    std::optional<std::vector<Step>> expect_schedule;
    std::vector<OracleExpectation> expect_oracle;

    ContractRegistry registry() const { return make_registry(genesis); }

    // Genesis state with the declared key bindings, after the setup
    // transactions have run serially.
    ChainState initial() const {
        ChainState sigma = initial_state(genesis);
        for (const auto& [qk, v] : initial_keys) sigma.set(qk, v);
        return exec_chain(sigma, setup, registry());
    }
};

// Fixture directory resolution: explicit argument, then the
// TXPAR_FIXTURES environment variable, then the build-time default.
inline std::filesystem::path default_fixtures_dir() {
    if (const char* env = std::getenv("TXPAR_FIXTURES")) return env;
#ifdef TXPAR_FIXTURES_DIR
    return TXPAR_FIXTURES_DIR;
#else
    return "fixtures";
#endif
}

namespace detail {

inline std::vector<std::pair<QualifiedKey, Value>> keyed_values_from_json(
    const Json& j, const std::string& what) {
    if (!j.is_object()) throw IoError(what + ": expected {address: {key: value}}");
    std::vector<std::pair<QualifiedKey, Value>> out;
    for (const auto& [addr, store] : j.items()) {
        if (!store.is_object()) throw IoError(what + "." + addr + ": expected {key: value}");
        for (const auto& [key, val] : store.items())
            out.emplace_back(QualifiedKey{account(addr), parse_key_string(key)},
                             value_from_json(val, what + "." + addr + "." + key));
    }
    return out;
}

inline IndexRelation pairs_from_json(const Json& j, const std::string& what) {
    if (!j.is_array()) throw IoError(what + ": expected an array of [i,j] pairs");
    IndexRelation out;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            throw IoError(what + ": expected [i,j] pairs");
        out.emplace(entry[0].get<std::size_t>(), entry[1].get<std::size_t>());
    }
    return out;
}

}  // namespace detail

inline Fixture load_fixture(const std::string& name,
                            const std::filesystem::path& dir = default_fixtures_dir()) {
    const std::filesystem::path base = dir / name;
    const std::filesystem::path manifest = base / "fixture.json";
    if (!std::filesystem::exists(manifest))
        throw IoError("unknown fixture: " + name + " (no " + manifest.string() + ")");
    const Json j = read_json_file(manifest);
    if (!j.is_object()) throw IoError(manifest.string() + ": expected an object");

    Fixture f;
    f.name = name;
    if (!j.contains("genesis")) throw IoError(manifest.string() + ": missing genesis");
    f.genesis = genesis_from_json(j.at("genesis"), base, manifest.string() + ": genesis");
    if (j.contains("initial_keys"))
        f.initial_keys = detail::keyed_values_from_json(j.at("initial_keys"), "initial_keys");
    if (j.contains("setup")) f.setup = block_from_json(j.at("setup"), "setup");
    if (!j.contains("block")) throw IoError(manifest.string() + ": missing block");
    f.block = block_from_json(j.at("block"), "block");

    if (j.contains("expect")) {
        const Json& e = j.at("expect");
        if (!e.is_object()) throw IoError(manifest.string() + ": expect: expected an object");
        if (e.contains("state"))
            f.expect_state = detail::keyed_values_from_json(e.at("state"), "expect.state");
        if (e.contains("relation"))
            f.expect_relation = detail::pairs_from_json(e.at("relation"), "expect.relation");
        if (e.contains("order_places"))
            f.expect_order_places =
                detail::pairs_from_json(e.at("order_places"), "expect.order_places");
        if (e.contains("schedule")) {
            if (!e.at("schedule").is_array())
                throw IoError(manifest.string() + ": expect.schedule: expected an array");
            std::vector<Step> schedule;
            for (const auto& step : e.at("schedule")) {
                if (!step.is_array())
                    throw IoError(manifest.string() + ": expect.schedule: steps are arrays");
                Step s;
                for (const auto& pos : step) s.insert(pos.get<std::size_t>());
                schedule.push_back(std::move(s));
            }
            f.expect_schedule = std::move(schedule);
        }
        if (e.contains("oracle")) {
            if (!e.at("oracle").is_array())
                throw IoError(manifest.string() + ": expect.oracle: expected an array");
            for (const auto& entry : e.at("oracle")) {
                if (!entry.is_object() || !entry.contains("pair") ||
                    !entry.contains("swappable") || entry.at("pair").size() != 2)
                    throw IoError(manifest.string() +
                                  ": expect.oracle: entries are {pair, swappable}");
                OracleExpectation oe;
                oe.i = entry.at("pair")[0].get<std::size_t>();
                oe.j = entry.at("pair")[1].get<std::size_t>();
                oe.swappable = entry.at("swappable").get<bool>();
                if (entry.contains("depth")) oe.depth = entry.at("depth").get<std::size_t>();
                f.expect_oracle.push_back(oe);
            }
        }
    }
    return f;
}

inline std::vector<std::string> fixture_names(
    const std::filesystem::path& dir = default_fixtures_dir()) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "fixture.json"))
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

// Synthetic workload: n account-to-account transfers, pairwise
// independent because every pair of accounts is used at most once.
inline std::pair<Genesis, Blockchain> independent_transfer_workload(std::size_t n) {
    Genesis g;
    Blockchain block;
    for (std::size_t i = 0; i < n; ++i) {
        Address from = account("s" + std::to_string(i));
        Address to = account("r" + std::to_string(i));
        g.balances[from] = 2;
        g.balances[to] = 0;
        block.push_back(Transaction{from, to, "skip", 1, {}});
    }
    return {std::move(g), std::move(block)};
}

// Synthetic workload: n transfers that all drain one shared account, so
// every pair conflicts and no two can run in one step.
inline std::pair<Genesis, Blockchain> conflicting_transfer_workload(std::size_t n) {
    Genesis g;
    Blockchain block;
    Address hub = account("hub");
    g.balances[hub] = Int(n);
    for (std::size_t i = 0; i < n; ++i) {
        Address to = account("r" + std::to_string(i));
        g.balances[to] = 0;
        block.push_back(Transaction{hub, to, "skip", 1, {}});
    }
    return {std::move(g), std::move(block)};
}

}  // namespace txpar
