#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace txpar {

using Int = boost::multiprecision::cpp_int;

enum class AddrKind { account, contract };

// Addresses compare by name, which is unique per chain; the kind is
// declaration metadata telling whether a store may hold keys other than
// balance. Source literals default to account and pick up the declared
// kind when resolved against a chain.
struct Address {
    AddrKind kind{AddrKind::account};
    std::string name;

    friend bool operator==(const Address& a, const Address& b) { return a.name == b.name; }
    friend bool operator<(const Address& a, const Address& b) { return a.name < b.name; }
};

inline Address account(std::string name) { return Address{AddrKind::account, std::move(name)}; }
inline Address contract_addr(std::string name) { return Address{AddrKind::contract, std::move(name)}; }

// A value is one of: unit, arbitrary-precision integer, boolean, address.
class Value {
  public:
    using Rep = std::variant<std::monostate, Int, bool, Address>;

    Value() = default;

    static Value unit() { return Value{}; }
    static Value integer(Int n) { return Value{Rep{std::move(n)}}; }
    static Value integer(std::int64_t n) { return Value{Rep{Int(n)}}; }
    static Value boolean(bool b) { return Value{Rep{b}}; }
    static Value address(Address a) { return Value{Rep{std::move(a)}}; }

    bool is_unit() const { return std::holds_alternative<std::monostate>(rep_); }
    bool is_int() const { return std::holds_alternative<Int>(rep_); }
    bool is_bool() const { return std::holds_alternative<bool>(rep_); }
    bool is_address() const { return std::holds_alternative<Address>(rep_); }

    const Int& as_int() const { return std::get<Int>(rep_); }
    bool as_bool() const { return std::get<bool>(rep_); }
    const Address& as_address() const { return std::get<Address>(rep_); }

    friend bool operator==(const Value& a, const Value& b) { return a.rep_ == b.rep_; }
    friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
    friend bool operator<(const Value& a, const Value& b) {
        if (a.rep_.index() != b.rep_.index()) return a.rep_.index() < b.rep_.index();
        return a.rep_ < b.rep_;
    }

    std::string to_string() const {
        struct V {
            std::string operator()(const std::monostate&) const { return "unit"; }
            std::string operator()(const Int& n) const { return n.str(); }
            std::string operator()(bool b) const { return b ? "true" : "false"; }
            std::string operator()(const Address& a) const { return a.name; }
        };
        return std::visit(V{}, rep_);
    }

  private:
    explicit Value(Rep rep) : rep_(std::move(rep)) {}
    Rep rep_;
};

// Store key: a base name plus zero or more index values. The zero-index
// base "balance" is the native currency slot every address carries.
struct CompositeKey {
    std::string base;
    std::vector<Value> indices;

    friend bool operator==(const CompositeKey& a, const CompositeKey& b) {
        return a.base == b.base && a.indices == b.indices;
    }
    friend bool operator<(const CompositeKey& a, const CompositeKey& b) {
        if (a.base != b.base) return a.base < b.base;
        return a.indices < b.indices;
    }
};

inline CompositeKey balance_key() { return CompositeKey{"balance", {}}; }

inline bool is_balance_key(const CompositeKey& k) {
    return k.base == "balance" && k.indices.empty();
}

// A key qualified by the address whose store holds it.
struct QualifiedKey {
    Address addr;
    CompositeKey key;

    friend bool operator==(const QualifiedKey& a, const QualifiedKey& b) {
        return a.addr == b.addr && a.key == b.key;
    }
    friend bool operator<(const QualifiedKey& a, const QualifiedKey& b) {
        if (!(a.addr == b.addr)) return a.addr < b.addr;
        return a.key < b.key;
    }
};

inline QualifiedKey balance_of(const Address& a) { return QualifiedKey{a, balance_key()}; }

// Textual form: base or base[i1][i2]. Index values print bare;
// integers as digits, booleans as true/false, addresses by name.
inline std::string encode_key(const CompositeKey& k) {
    std::ostringstream out;
    out << k.base;
    for (const auto& ix : k.indices) out << '[' << ix.to_string() << ']';
    return out.str();
}

inline std::string encode_key(const QualifiedKey& qk) {
    return qk.addr.name + "." + encode_key(qk.key);
}

}  // namespace txpar
