#include "txpar/analysis.hpp"
#include "txpar/equivalence.hpp"
#include "txpar/executor.hpp"
#include "txpar/fixtures.hpp"
#include "txpar/io.hpp"
#include "txpar/net.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using namespace txpar;

struct Config {
    std::string fixture;
    std::string fixtures_dir;
    std::string genesis_path;
    std::vector<std::string> contract_paths;
    std::string txs_path;
    unsigned workers = 1;
    std::size_t depth = 3;
    std::string format = "text";
    std::string reorder = "none";

    bool structured() const { return format == "structured"; }
};

struct Inputs {
    Genesis genesis;
    ContractRegistry reg;
    ChainState initial;
    Blockchain block;
};

Inputs load_inputs(const Config& cfg) {
    if (!cfg.fixture.empty()) {
        if (!cfg.genesis_path.empty() || !cfg.txs_path.empty() || !cfg.contract_paths.empty())
            throw IoError("--fixture replaces --genesis, --contracts and --txs");
        Fixture f = load_fixture(cfg.fixture, cfg.fixtures_dir.empty()
                                                  ? default_fixtures_dir()
                                                  : std::filesystem::path(cfg.fixtures_dir));
        return Inputs{f.genesis, f.registry(), f.initial(), f.block};
    }
    if (cfg.genesis_path.empty())
        throw IoError("no input: give --genesis (with optional --txs) or --fixture");
    Genesis g = load_genesis(cfg.genesis_path);
    for (const auto& path : cfg.contract_paths)
        for (auto& c : load_contract_file(path)) g.contracts.push_back(std::move(c));
    ContractRegistry reg = make_registry(g);
    ChainState initial = initial_state(g);
    Blockchain block;
    if (!cfg.txs_path.empty()) block = load_transactions(cfg.txs_path);
    return Inputs{std::move(g), std::move(reg), std::move(initial), std::move(block)};
}

void print_state_text(std::ostream& out, const ChainState& sigma) {
    for (const auto& [addr, store] : sigma.stores())
        for (const auto& [key, val] : store)
            out << "  " << encode_key(QualifiedKey{addr, key}) << " = " << val.to_string()
                << "\n";
}

Json relation_to_json(const IndexRelation& rel) {
    Json out = Json::array();
    for (const auto& [i, j] : rel) out.push_back(Json::array({i, j}));
    return out;
}

Json approx_to_json(const KeyApprox& a) {
    Json keys = Json::array();
    for (const auto& qk : a.exact) keys.push_back(encode_key(qk));
    Json stores = Json::array();
    for (const auto& addr : a.top_contracts) stores.push_back(addr.name);
    return Json{{"keys", keys}, {"whole_stores", stores}, {"all_balances", a.all_balances}};
}

std::string approx_to_text(const KeyApprox& a) {
    std::string out;
    auto append = [&](const std::string& piece) {
        if (!out.empty()) out += ", ";
        out += piece;
    };
    for (const auto& qk : a.exact) append(encode_key(qk));
    for (const auto& addr : a.top_contracts) append("all of " + addr.name);
    if (a.all_balances) append("every balance");
    return out.empty() ? "(none)" : out;
}

Json report_to_json(const ExecutionReport& r) {
    Json schedule = Json::array();
    for (const auto& step : r.schedule) schedule.push_back(Json(step));
    return Json{{"schedule", schedule},      {"step_millis", r.step_millis},
                {"update_sizes", r.update_sizes}, {"digest", r.digest},
                {"conflicts", r.conflicts},  {"total_millis", r.total_millis()}};
}

void print_report_text(std::ostream& out, const ExecutionReport& r) {
    out << "schedule:";
    for (const auto& step : r.schedule) out << " " << step_to_string(step);
    out << "\n";
    for (std::size_t s = 0; s < r.schedule.size(); ++s) {
        out << "step " << s + 1 << ": " << r.schedule[s].size() << " tx, " << r.step_millis[s]
            << " ms, update sizes [";
        for (std::size_t m = 0; m < r.update_sizes[s].size(); ++m) {
            if (m) out << ", ";
            out << r.update_sizes[s][m];
        }
        out << "]\n";
    }
    out << "conflicts: " << r.conflicts << "\n";
    out << "digest: " << r.digest << "\n";
}

int cmd_run(const Config& cfg) {
    Inputs in = load_inputs(cfg);
    ChainState final_state = exec_chain(in.initial, in.block, in.reg);
    if (cfg.structured()) {
        Json out{{"state", state_to_json(final_state)}, {"digest", state_digest(final_state)}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "state:\n";
        print_state_text(std::cout, final_state);
        std::cout << "digest: " << state_digest(final_state) << "\n";
    }
    return 0;
}

int cmd_analyze(const Config& cfg) {
    Inputs in = load_inputs(cfg);
    IndexRelation rel = swap_relation(in.block, in.reg);
    if (cfg.structured()) {
        Json txs = Json::array();
        for (std::size_t i = 0; i < in.block.size(); ++i) {
            RWSets rw = tx_rw_sets(in.block[i], in.reg);
            txs.push_back(Json{{"index", i + 1},
                               {"tx", tx_to_json(in.block[i])},
                               {"reads", approx_to_json(rw.reads)},
                               {"writes", approx_to_json(rw.writes)}});
        }
        Json out{{"transactions", txs}, {"relation", relation_to_json(rel)}};
        std::cout << out.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < in.block.size(); ++i) {
            RWSets rw = tx_rw_sets(in.block[i], in.reg);
            std::cout << "t" << i + 1 << ": " << in.block[i].to_string() << "\n";
            std::cout << "  reads:  " << approx_to_text(rw.reads) << "\n";
            std::cout << "  writes: " << approx_to_text(rw.writes) << "\n";
        }
        std::cout << "strongly swappable pairs:";
        if (rel.empty()) std::cout << " (none)";
        for (const auto& [i, j] : rel) std::cout << " (" << i << "," << j << ")";
        std::cout << "\n";
    }
    return 0;
}

int cmd_net(const Config& cfg) {
    Inputs in = load_inputs(cfg);
    Net net = build_net(in.block, symmetric_closure(swap_relation(in.block, in.reg)));
    std::cout << export_net(net,
                            cfg.structured() ? NetFormat::structured : NetFormat::dot);
    return 0;
}

int cmd_exec_par(const Config& cfg) {
    Inputs in = load_inputs(cfg);
    Blockchain block = in.block;
    if (cfg.reorder == "greedy-parallel") block = reorder_greedy_parallel(block, in.reg);
    ParallelOptions opt;
    opt.workers = cfg.workers;
    ParallelResult r = exec_parallel(in.initial, block, in.reg, opt);
    if (cfg.structured()) {
        Json out{{"block", block_to_json(block)},
                 {"state", state_to_json(r.state)},
                 {"report", report_to_json(r.report)}};
        std::cout << out.dump(2) << "\n";
    } else {
        if (cfg.reorder != "none") {
            std::cout << "executed order:\n";
            for (std::size_t i = 0; i < block.size(); ++i)
                std::cout << "  t" << i + 1 << ": " << block[i].to_string() << "\n";
        }
        print_report_text(std::cout, r.report);
        std::cout << "state:\n";
        print_state_text(std::cout, r.state);
    }
    return 0;
}

int cmd_validate(const Config& cfg, const std::string& expected) {
    Inputs in = load_inputs(cfg);
    ParallelOptions opt;
    opt.workers = cfg.workers;
    ValidationOutcome v = validate_block(in.initial, in.block, in.reg, expected, opt);
    if (cfg.structured()) {
        Json out{{"ok", v.ok}, {"expected", v.expected}, {"actual", v.actual}};
        std::cout << out.dump(2) << "\n";
    } else if (v.ok) {
        std::cout << "ok: " << v.actual << "\n";
    } else {
        std::cout << "mismatch:\n  expected " << v.expected << "\n  actual   " << v.actual
                  << "\n";
    }
    return v.ok ? 0 : 2;
}

int cmd_oracle(const Config& cfg, std::size_t i, std::size_t j) {
    if (i == j) throw CLI::ValidationError("oracle", "positions must differ");
    Inputs in = load_inputs(cfg);
    if (i < 1 || j < 1 || i > in.block.size() || j > in.block.size())
        throw IoError("oracle: positions must lie in 1.." + std::to_string(in.block.size()));
    StateUniverse u = StateUniverse::bounded_reachable(in.initial, in.block, in.reg, cfg.depth);
    SwapVerdict v = oracle_swappable(in.block[i - 1], in.block[j - 1], u, in.reg);
    if (cfg.structured()) {
        Json out{{"pair", Json::array({i, j})},
                 {"depth", cfg.depth},
                 {"universe_states", u.states.size()},
                 {"swappable", v.swappable}};
        if (!v.swappable) {
            out["witness"] = state_to_json(*v.witness);
            out["differing_key"] = encode_key(*v.differing_key);
        }
        std::cout << out.dump(2) << "\n";
    } else if (v.swappable) {
        std::cout << "swappable over " << u.states.size() << " states (depth " << cfg.depth
                  << ")\n";
    } else {
        std::cout << "not swappable; the orders disagree on " << encode_key(*v.differing_key)
                  << " from:\n";
        print_state_text(std::cout, *v.witness);
    }
    return 0;
}

int cmd_bench(const Config& cfg, const std::vector<std::size_t>& sizes,
              const std::string& workload) {
    auto now = [] { return std::chrono::steady_clock::now(); };
    auto ms = [](auto a, auto b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    Json rows = Json::array();
    for (std::size_t n : sizes) {
        if (n == 0) continue;
        auto [genesis, block] = workload == "conflicting" ? conflicting_transfer_workload(n)
                                                          : independent_transfer_workload(n);
        ContractRegistry reg = make_registry(genesis);
        ChainState initial = initial_state(genesis);

        auto t0 = now();
        ChainState serial = exec_chain(initial, block, reg);
        double serial_ms = ms(t0, now());
        std::string serial_digest = state_digest(serial);

        Json runs = Json::array();
        if (!cfg.structured())
            std::cout << "n=" << n << " workload=" << workload << "\n  serial:    " << serial_ms
                      << " ms\n";
        for (unsigned workers : {1u, 2u, 4u}) {
            ParallelOptions opt;
            opt.workers = workers;
            auto t1 = now();
            ParallelResult r = exec_parallel(initial, block, reg, opt);
            double par_ms = ms(t1, now());
            bool match = r.report.digest == serial_digest;
            runs.push_back(
                Json{{"workers", workers}, {"millis", par_ms}, {"digest_match", match}});
            if (!cfg.structured())
                std::cout << "  workers=" << workers << ": " << par_ms << " ms, digest "
                          << (match ? "matches" : "DIFFERS") << "\n";
        }
        rows.push_back(Json{{"n", n},
                            {"workload", workload},
                            {"serial_millis", serial_ms},
                            {"runs", runs}});
    }
    if (cfg.structured()) std::cout << Json{{"rows", rows}}.dump(2) << "\n";
    return 0;
}

int cmd_fixtures(const Config& cfg) {
    std::vector<std::string> names =
        fixture_names(cfg.fixtures_dir.empty() ? default_fixtures_dir()
                                               : std::filesystem::path(cfg.fixtures_dir));
    if (cfg.structured()) {
        std::cout << Json{{"fixtures", names}}.dump(2) << "\n";
    } else {
        for (const auto& name : names) std::cout << name << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial and concurrent execution of smart-contract transaction blocks"};
    app.require_subcommand(1);
    app.fallthrough();

    Config cfg;
    app.add_option("--fixture", cfg.fixture, "bundled fixture name (see `fixtures`)");
    app.add_option("--fixtures-dir", cfg.fixtures_dir, "fixture directory override");
    app.add_option("--genesis", cfg.genesis_path, "genesis JSON file");
    app.add_option("--contracts", cfg.contract_paths, "additional contract source files");
    app.add_option("--txs", cfg.txs_path, "transaction list JSON file");
    app.add_option("--workers", cfg.workers, "worker pool size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--depth", cfg.depth, "oracle universe depth")->capture_default_str();
    app.add_option("--format", cfg.format, "output format")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
    app.add_option("--reorder", cfg.reorder, "miner ordering policy")
        ->check(CLI::IsMember({"none", "greedy-parallel"}))
        ->capture_default_str();

    CLI::App* run = app.add_subcommand("run", "execute the block serially");
    CLI::App* analyze =
        app.add_subcommand("analyze", "static read/write sets and the swap relation");
    CLI::App* net = app.add_subcommand("net", "occurrence net (text: dot, structured: json)");
    CLI::App* exec_par = app.add_subcommand("exec-par", "execute the block concurrently");

    CLI::App* validate =
        app.add_subcommand("validate", "re-execute and compare against a digest");
    std::string expected_digest;
    validate->add_option("--expect", expected_digest, "expected state digest")->required();

    CLI::App* oracle =
        app.add_subcommand("oracle", "exhaustive swappability check for two positions");
    std::size_t pos_i = 0, pos_j = 0;
    oracle->add_option("i", pos_i, "first position, 1-based")->required();
    oracle->add_option("j", pos_j, "second position, 1-based")->required();

    CLI::App* bench = app.add_subcommand("bench", "time synthetic workloads");
    std::vector<std::size_t> sizes{100, 1000};
    std::string workload = "independent";
    bench->add_option("sizes", sizes, "workload sizes")->capture_default_str();
    bench->add_option("--workload", workload, "workload shape")
        ->check(CLI::IsMember({"independent", "conflicting"}))
        ->capture_default_str();

    CLI::App* fixtures = app.add_subcommand("fixtures", "list bundled fixtures");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(cfg);
        if (analyze->parsed()) return cmd_analyze(cfg);
        if (net->parsed()) return cmd_net(cfg);
        if (exec_par->parsed()) return cmd_exec_par(cfg);
        if (validate->parsed()) return cmd_validate(cfg, expected_digest);
        if (oracle->parsed()) return cmd_oracle(cfg, pos_i, pos_j);
        if (bench->parsed()) return cmd_bench(cfg, sizes, workload);
        if (fixtures->parsed()) return cmd_fixtures(cfg);
        return 1;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const txpar::ConflictError& e) {
        std::cerr << "conflict: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
