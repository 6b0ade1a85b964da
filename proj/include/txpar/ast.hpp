#pragma once

#include "txpar/value.hpp"

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace txpar {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinOp { add, sub, eq, ne, lt, le, gt, ge, land, lor };

// Store key with index expressions still unevaluated.
struct KeyExpr {
    std::string base;
    std::vector<ExprPtr> indices;
};

struct Expr {
    struct Lit {
        Value v;
    };
    struct Param {
        std::string name;
    };
    struct Sender {};
    struct CallValue {};
    struct Lookup {
        KeyExpr key;
    };
    struct Bin {
        BinOp op;
        ExprPtr lhs, rhs;
    };
    struct Not {
        ExprPtr arg;
    };

    using Node = std::variant<Lit, Param, Sender, CallValue, Lookup, Bin, Not>;
    Node node;
};

inline ExprPtr make_expr(Expr::Node n) { return std::make_shared<const Expr>(Expr{std::move(n)}); }

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
    struct Skip {};
    struct Assign {
        KeyExpr target;
        ExprPtr value;
    };
    struct Seq {
        StmtPtr first, second;
    };
    struct If {
        ExprPtr cond;
        StmtPtr then_branch, else_branch;
    };
    struct Throw {};
    struct Send {
        ExprPtr amount, recipient;
    };

    using Node = std::variant<Skip, Assign, Seq, If, Throw, Send>;
    Node node;
};

inline StmtPtr make_stmt(Stmt::Node n) { return std::make_shared<const Stmt>(Stmt{std::move(n)}); }

struct FunctionDef {
    std::string name;
    std::vector<std::string> params;
    StmtPtr body;
};

struct Contract {
    Address addr;  // always AddrKind::contract
    std::map<std::string, FunctionDef> functions;
    // Index count per base name, fixed contract-wide at parse time.
    std::map<std::string, std::size_t> key_arity;
};

// The calling environment a transaction provides to the body.
struct Env {
    Address sender;
    Int call_value;
    std::map<std::string, Value> params;
};

bool expr_equal(const Expr& a, const Expr& b);
bool stmt_equal(const Stmt& a, const Stmt& b);

inline bool key_expr_equal(const KeyExpr& a, const KeyExpr& b) {
    if (a.base != b.base || a.indices.size() != b.indices.size()) return false;
    for (std::size_t i = 0; i < a.indices.size(); ++i)
        if (!expr_equal(*a.indices[i], *b.indices[i])) return false;
    return true;
}

inline bool expr_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    struct V {
        const Expr::Node& other;
        bool operator()(const Expr::Lit& x) const { return x.v == std::get<Expr::Lit>(other).v; }
        bool operator()(const Expr::Param& x) const {
            return x.name == std::get<Expr::Param>(other).name;
        }
        bool operator()(const Expr::Sender&) const { return true; }
        bool operator()(const Expr::CallValue&) const { return true; }
        bool operator()(const Expr::Lookup& x) const {
            return key_expr_equal(x.key, std::get<Expr::Lookup>(other).key);
        }
        bool operator()(const Expr::Bin& x) const {
            const auto& y = std::get<Expr::Bin>(other);
            return x.op == y.op && expr_equal(*x.lhs, *y.lhs) && expr_equal(*x.rhs, *y.rhs);
        }
        bool operator()(const Expr::Not& x) const {
            return expr_equal(*x.arg, *std::get<Expr::Not>(other).arg);
        }
    };
    return std::visit(V{b.node}, a.node);
}

inline bool stmt_equal(const Stmt& a, const Stmt& b) {
    if (a.node.index() != b.node.index()) return false;
    struct V {
        const Stmt::Node& other;
        bool operator()(const Stmt::Skip&) const { return true; }
        bool operator()(const Stmt::Throw&) const { return true; }
        bool operator()(const Stmt::Assign& x) const {
            const auto& y = std::get<Stmt::Assign>(other);
            return key_expr_equal(x.target, y.target) && expr_equal(*x.value, *y.value);
        }
        bool operator()(const Stmt::Seq& x) const {
            const auto& y = std::get<Stmt::Seq>(other);
            return stmt_equal(*x.first, *y.first) && stmt_equal(*x.second, *y.second);
        }
        bool operator()(const Stmt::If& x) const {
            const auto& y = std::get<Stmt::If>(other);
            return expr_equal(*x.cond, *y.cond) && stmt_equal(*x.then_branch, *y.then_branch) &&
                   stmt_equal(*x.else_branch, *y.else_branch);
        }
        bool operator()(const Stmt::Send& x) const {
            const auto& y = std::get<Stmt::Send>(other);
            return expr_equal(*x.amount, *y.amount) && expr_equal(*x.recipient, *y.recipient);
        }
    };
    return std::visit(V{b.node}, a.node);
}

inline bool function_equal(const FunctionDef& a, const FunctionDef& b) {
    return a.name == b.name && a.params == b.params && stmt_equal(*a.body, *b.body);
}

inline bool contract_equal(const Contract& a, const Contract& b) {
    if (!(a.addr == b.addr) || a.functions.size() != b.functions.size()) return false;
    for (const auto& [name, fn] : a.functions) {
        auto it = b.functions.find(name);
        if (it == b.functions.end() || !function_equal(fn, it->second)) return false;
    }
    return true;
}

namespace detail {

// Precedence, loosest first: || < && < comparisons < additive < unary.
inline int binop_prec(BinOp op) {
    switch (op) {
        case BinOp::lor: return 1;
        case BinOp::land: return 2;
        case BinOp::add:
        case BinOp::sub: return 4;
        default: return 3;
    }
}

inline const char* binop_text(BinOp op) {
    switch (op) {
        case BinOp::add: return "+";
        case BinOp::sub: return "-";
        case BinOp::eq: return "==";
        case BinOp::ne: return "!=";
        case BinOp::lt: return "<";
        case BinOp::le: return "<=";
        case BinOp::gt: return ">";
        case BinOp::ge: return ">=";
        case BinOp::land: return "&&";
        case BinOp::lor: return "||";
    }
    return "?";
}

inline std::string print_literal(const Value& v) {
    if (v.is_address()) return "@" + v.as_address().name;
    return v.to_string();
}

void print_expr(std::string& out, const Expr& e, int parent_prec);

inline void print_key_expr(std::string& out, const KeyExpr& k) {
    out += k.base;
    for (const auto& ix : k.indices) {
        out += '[';
        print_expr(out, *ix, 0);
        out += ']';
    }
}

inline void print_expr(std::string& out, const Expr& e, int parent_prec) {
    struct V {
        std::string& out;
        int parent;
        void operator()(const Expr::Lit& x) const { out += print_literal(x.v); }
        void operator()(const Expr::Param& x) const { out += x.name; }
        void operator()(const Expr::Sender&) const { out += "sender"; }
        void operator()(const Expr::CallValue&) const { out += "value"; }
        void operator()(const Expr::Lookup& x) const {
            out += '!';
            print_key_expr(out, x.key);
        }
        void operator()(const Expr::Bin& x) const {
            int prec = binop_prec(x.op);
            bool parens = prec < parent;
            if (parens) out += '(';
            // Left-associative operators reuse their level on the left;
            // comparisons do not chain, so both sides bind tighter.
            int lhs_prec = (prec == 3) ? prec + 1 : prec;
            int rhs_prec = prec + 1;
            print_expr(out, *x.lhs, lhs_prec);
            out += ' ';
            out += binop_text(x.op);
            out += ' ';
            print_expr(out, *x.rhs, rhs_prec);
            if (parens) out += ')';
        }
        void operator()(const Expr::Not& x) const {
            out += "not ";
            print_expr(out, *x.arg, 5);
        }
    };
    std::visit(V{out, parent_prec}, e.node);
}

inline bool is_skip(const Stmt& s) { return std::holds_alternative<Stmt::Skip>(s.node); }

void print_stmt(std::string& out, const Stmt& s, int indent);

inline void print_indent(std::string& out, int indent) { out.append(indent * 4, ' '); }

inline void print_block(std::string& out, const Stmt& s, int indent) {
    out += "{\n";
    print_stmt(out, s, indent + 1);
    out += '\n';
    print_indent(out, indent);
    out += '}';
}

inline void print_stmt(std::string& out, const Stmt& s, int indent) {
    struct V {
        std::string& out;
        int indent;
        void operator()(const Stmt::Skip&) const {
            print_indent(out, indent);
            out += "skip";
        }
        void operator()(const Stmt::Throw&) const {
            print_indent(out, indent);
            out += "throw";
        }
        void operator()(const Stmt::Assign& x) const {
            print_indent(out, indent);
            print_key_expr(out, x.target);
            out += " := ";
            print_expr(out, *x.value, 0);
        }
        void operator()(const Stmt::Seq& x) const {
            print_stmt(out, *x.first, indent);
            out += ";\n";
            print_stmt(out, *x.second, indent);
        }
        void operator()(const Stmt::If& x) const {
            print_indent(out, indent);
            out += "if ";
            print_expr(out, *x.cond, 0);
            out += " then ";
            print_block(out, *x.then_branch, indent);
            if (!is_skip(*x.else_branch)) {
                out += " else ";
                print_block(out, *x.else_branch, indent);
            }
        }
        void operator()(const Stmt::Send& x) const {
            print_indent(out, indent);
            out += "send(";
            print_expr(out, *x.amount, 0);
            out += ", ";
            print_expr(out, *x.recipient, 0);
            out += ')';
        }
    };
    std::visit(V{out, indent}, s.node);
}

}  // namespace detail

inline std::string print_expr(const Expr& e) {
    std::string out;
    detail::print_expr(out, e, 0);
    return out;
}

inline std::string print_contract(const Contract& c) {
    std::string out = "contract " + c.addr.name + " {\n";
    for (const auto& [name, fn] : c.functions) {
        out += "    fun " + name + "(";
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            if (i) out += ", ";
            out += fn.params[i];
        }
        out += ") {\n";
        detail::print_stmt(out, *fn.body, 2);
        out += "\n    }\n";
    }
    out += "}\n";
    return out;
}

}  // namespace txpar
