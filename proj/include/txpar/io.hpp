#pragma once

#include "txpar/parser.hpp"
#include "txpar/state.hpp"
#include "txpar/tx.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace txpar {

using Json = nlohmann::json;

// Raised on malformed input documents. Messages carry the file or entry
// that failed so callers can surface locations without a stack trace.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline Json int_to_json(const Int& n) {
    static const Int lo = std::numeric_limits<std::int64_t>::min();
    static const Int hi = std::numeric_limits<std::int64_t>::max();
    if (n >= lo && n <= hi) return static_cast<std::int64_t>(n);
    return n.str();
}

inline Int int_from_json(const Json& j, const std::string& what) {
    if (j.is_number_integer()) return Int(j.get<std::int64_t>());
    if (j.is_number_unsigned()) return Int(j.get<std::uint64_t>());
    if (j.is_string()) {
        try {
            return Int(j.get<std::string>());
        } catch (const std::exception&) {
            throw IoError(what + ": not an integer: " + j.get<std::string>());
        }
    }
    throw IoError(what + ": expected integer, got " + j.dump());
}

// Values: null = unit, booleans and integers map directly, addresses are
// strings prefixed with '@'. Integers outside int64 travel as decimal strings.
inline Json value_to_json(const Value& v) {
    if (v.is_unit()) return nullptr;
    if (v.is_bool()) return v.as_bool();
    if (v.is_address()) return "@" + v.as_address().name;
    return int_to_json(v.as_int());
}

inline Value value_from_json(const Json& j, const std::string& what = "value") {
    if (j.is_null()) return Value::unit();
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (!s.empty() && s[0] == '@') {
            if (s.size() == 1) throw IoError(what + ": empty address name");
            return Value::address(account(s.substr(1)));
        }
        try {
            return Value::integer(Int(s));
        } catch (const std::exception&) {
            throw IoError(what + ": not a value: " + s);
        }
    }
    return Value::integer(int_from_json(j, what));
}

inline Json tx_to_json(const Transaction& t) {
    Json args = Json::array();
    for (const auto& v : t.args) args.push_back(value_to_json(v));
    return Json{{"sender", t.sender.name},
                {"callee", t.callee.name},
                {"function", t.function},
                {"value", int_to_json(t.value)},
                {"args", args}};
}

inline Transaction tx_from_json(const Json& j, const std::string& what = "transaction") {
    if (!j.is_object()) throw IoError(what + ": expected an object, got " + j.dump());
    for (const char* field : {"sender", "callee", "function"})
        if (!j.contains(field) || !j.at(field).is_string())
            throw IoError(what + ": missing string field \"" + field + "\"");
    Transaction t;
    t.sender = account(j.at("sender").get<std::string>());
    t.callee = account(j.at("callee").get<std::string>());
    t.function = j.at("function").get<std::string>();
    t.value = j.contains("value") ? int_from_json(j.at("value"), what + ".value") : Int(0);
    if (j.contains("args")) {
        if (!j.at("args").is_array()) throw IoError(what + ".args: expected an array");
        std::size_t i = 0;
        for (const auto& a : j.at("args"))
            t.args.push_back(value_from_json(a, what + ".args[" + std::to_string(i++) + "]"));
    }
    return t;
}

inline Json block_to_json(const Blockchain& b) {
    Json out = Json::array();
    for (const auto& t : b) out.push_back(tx_to_json(t));
    return out;
}

inline Blockchain block_from_json(const Json& j, const std::string& what = "transactions") {
    if (!j.is_array()) throw IoError(what + ": expected an array, got " + j.dump());
    Blockchain b;
    for (std::size_t i = 0; i < j.size(); ++i)
        b.push_back(tx_from_json(j[i], what + "[" + std::to_string(i) + "]"));
    return b;
}

// Inverse of encode_key(CompositeKey): base optionally followed by
// [index] groups, where an index is an integer, true/false, or an
// address name written bare.
inline CompositeKey parse_key_string(const std::string& s) {
    auto bad = [&]() -> IoError { return IoError("malformed key: " + s); };
    std::size_t open = s.find('[');
    CompositeKey k;
    k.base = s.substr(0, open);
    if (k.base.empty()) throw bad();
    for (char c : k.base)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') throw bad();
    std::size_t pos = open;
    while (pos != std::string::npos && pos < s.size()) {
        if (s[pos] != '[') throw bad();
        std::size_t close = s.find(']', pos);
        if (close == std::string::npos) throw bad();
        std::string tok = s.substr(pos + 1, close - pos - 1);
        if (tok.empty()) throw bad();
        if (tok == "true" || tok == "false") {
            k.indices.push_back(Value::boolean(tok == "true"));
        } else if (std::isdigit(static_cast<unsigned char>(tok[0])) ||
                   (tok[0] == '-' && tok.size() > 1)) {
            try {
                k.indices.push_back(Value::integer(Int(tok)));
            } catch (const std::exception&) {
                throw bad();
            }
        } else {
            k.indices.push_back(Value::address(account(tok)));
        }
        pos = close + 1;
    }
    return k;
}

inline Json state_to_json(const ChainState& sigma) {
    Json out = Json::object();
    for (const auto& [addr, store] : sigma.stores()) {
        Json entry = Json::object();
        for (const auto& [key, val] : store) entry[encode_key(key)] = value_to_json(val);
        out[addr.name] = entry;
    }
    return out;
}

inline Json update_to_json(const StateUpdate& u) {
    Json out = Json::object();
    for (const auto& [qk, val] : u.bindings()) out[encode_key(qk)] = value_to_json(val);
    return out;
}

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Json read_json_file(const std::filesystem::path& p) {
    const std::string text = read_text_file(p);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw IoError(p.string() + ": " + e.what());
    }
}

inline Blockchain load_transactions(const std::filesystem::path& p) {
    return block_from_json(read_json_file(p), p.string());
}

inline std::vector<Contract> load_contract_file(const std::filesystem::path& p) {
    try {
        return parse_contracts(read_text_file(p));
    } catch (const ParseError& e) {
        throw IoError(p.string() + ": " + e.what());
    }
}

// Genesis documents: {"balances": {name: amount}, "contracts": [path]}.
// Contract paths resolve relative to base_dir.
inline Genesis genesis_from_json(const Json& j, const std::filesystem::path& base_dir,
                                 const std::string& what = "genesis") {
    if (!j.is_object()) throw IoError(what + ": expected an object");
    Genesis g;
    if (j.contains("balances")) {
        if (!j.at("balances").is_object()) throw IoError(what + ": balances: expected an object");
        for (const auto& [name, amount] : j.at("balances").items())
            g.balances[account(name)] = int_from_json(amount, what + ": balance of " + name);
    }
    if (j.contains("contracts")) {
        if (!j.at("contracts").is_array()) throw IoError(what + ": contracts: expected an array");
        for (const auto& entry : j.at("contracts")) {
            if (!entry.is_string()) throw IoError(what + ": contracts: expected path strings");
            std::filesystem::path cp = entry.get<std::string>();
            if (cp.is_relative()) cp = base_dir / cp;
            for (auto& c : load_contract_file(cp)) g.contracts.push_back(std::move(c));
        }
    }
    return g;
}

inline Genesis load_genesis(const std::filesystem::path& p) {
    return genesis_from_json(read_json_file(p), p.parent_path(), p.string());
}

}  // namespace txpar
