#pragma once

#include "txpar/ast.hpp"

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace txpar {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(int line_, int col_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_),
          col(col_) {}
};

// Key arity is fixed per base name within one contract.
struct ArityError : ParseError {
    using ParseError::ParseError;
};

namespace detail {

enum class Tok {
    ident,
    number,
    at_name,
    lbrace,
    rbrace,
    lparen,
    rparen,
    lbracket,
    rbracket,
    comma,
    semi,
    assign,
    bang,
    plus,
    minus,
    eq,
    ne,
    lt,
    le,
    gt,
    ge,
    land,
    lor,
    eof,
};

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

inline std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto push = [&](Tok k, std::string text, int l, int c) {
        out.push_back(Token{k, std::move(text), l, c});
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++col;
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        int l = line, cl = col;
        auto two = [&](char second) { return i + 1 < src.size() && src[i + 1] == second; };
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            push(Tok::ident, std::string(src.substr(i, j - i)), l, cl);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            push(Tok::number, std::string(src.substr(i, j - i)), l, cl);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        if (c == '@') {
            std::size_t j = i + 1;
            if (j >= src.size() || !ident_start(src[j]))
                throw ParseError(l, cl, "expected name after '@'");
            while (j < src.size() && ident_char(src[j])) ++j;
            push(Tok::at_name, std::string(src.substr(i + 1, j - i - 1)), l, cl);
            col += static_cast<int>(j - i);
            i = j;
            continue;
        }
        auto single = [&](Tok k) {
            push(k, std::string(1, c), l, cl);
            ++i;
            ++col;
        };
        auto pair = [&](Tok k, const char* text) {
            push(k, text, l, cl);
            i += 2;
            col += 2;
        };
        switch (c) {
            case '{': single(Tok::lbrace); break;
            case '}': single(Tok::rbrace); break;
            case '(': single(Tok::lparen); break;
            case ')': single(Tok::rparen); break;
            case '[': single(Tok::lbracket); break;
            case ']': single(Tok::rbracket); break;
            case ',': single(Tok::comma); break;
            case ';': single(Tok::semi); break;
            case '+': single(Tok::plus); break;
            case '-': single(Tok::minus); break;
            case ':':
                if (two('=')) pair(Tok::assign, ":=");
                else throw ParseError(l, cl, "expected ':='");
                break;
            case '=':
                if (two('=')) pair(Tok::eq, "==");
                else single(Tok::eq);  // '=' is accepted as equality
                break;
            case '!':
                if (two('=')) pair(Tok::ne, "!=");
                else single(Tok::bang);
                break;
            case '<':
                if (two('=')) pair(Tok::le, "<=");
                else single(Tok::lt);
                break;
            case '>':
                if (two('=')) pair(Tok::ge, ">=");
                else single(Tok::gt);
                break;
            case '&':
                if (two('&')) pair(Tok::land, "&&");
                else throw ParseError(l, cl, "expected '&&'");
                break;
            case '|':
                if (two('|')) pair(Tok::lor, "||");
                else throw ParseError(l, cl, "expected '||'");
                break;
            default: throw ParseError(l, cl, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back(Token{Tok::eof, "", line, col});
    return out;
}

inline const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {"contract", "fun",  "skip",  "if",    "then",
                                             "else",     "throw", "require", "send",  "not",
                                             "true",     "false", "sender",  "value"};
    return kw;
}

class Parser {
  public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    std::vector<Contract> parse_file() {
        std::vector<Contract> out;
        while (!at(Tok::eof)) out.push_back(parse_contract());
        return out;
    }

  private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::map<std::string, std::size_t>* arity_ = nullptr;

    const Token& cur() const { return toks_[pos_]; }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_word(const char* w) const { return at(Tok::ident) && cur().text == w; }

    Token eat() { return toks_[pos_++]; }

    Token expect(Tok k, const char* what) {
        if (!at(k)) throw ParseError(cur().line, cur().col, std::string("expected ") + what);
        return eat();
    }

    Token expect_word(const char* w) {
        if (!at_word(w)) throw ParseError(cur().line, cur().col, std::string("expected '") + w + "'");
        return eat();
    }

    std::string expect_name(const char* what) {
        Token t = expect(Tok::ident, what);
        if (keywords().count(t.text))
            throw ParseError(t.line, t.col, "'" + t.text + "' is reserved");
        return t.text;
    }

    Contract parse_contract() {
        expect_word("contract");
        std::string name = expect_name("contract name");
        Contract c;
        c.addr = contract_addr(name);
        arity_ = &c.key_arity;
        expect(Tok::lbrace, "'{'");
        while (at_word("fun")) {
            FunctionDef fn = parse_function();
            auto [it, fresh] = c.functions.emplace(fn.name, std::move(fn));
            if (!fresh)
                throw ParseError(cur().line, cur().col,
                                 "duplicate function '" + it->first + "' in " + name);
        }
        expect(Tok::rbrace, "'}'");
        arity_ = nullptr;
        return c;
    }

    FunctionDef parse_function() {
        expect_word("fun");
        FunctionDef fn;
        fn.name = expect_name("function name");
        expect(Tok::lparen, "'('");
        if (!at(Tok::rparen)) {
            while (true) {
                Token t = cur();
                std::string p = expect_name("parameter name");
                for (const auto& seen : fn.params)
                    if (seen == p) throw ParseError(t.line, t.col, "duplicate parameter '" + p + "'");
                fn.params.push_back(std::move(p));
                if (!at(Tok::comma)) break;
                eat();
            }
        }
        expect(Tok::rparen, "')'");
        expect(Tok::lbrace, "'{'");
        fn.body = at(Tok::rbrace) ? make_stmt(Stmt::Skip{}) : parse_stmts();
        expect(Tok::rbrace, "'}'");
        return fn;
    }

    // Sequences fold to the right: a; b; c parses as Seq(a, Seq(b, c)).
    StmtPtr parse_stmts() {
        StmtPtr first = parse_stmt();
        if (at(Tok::semi)) {
            eat();
            if (at(Tok::rbrace) || at(Tok::eof)) return first;  // trailing ';'
            return make_stmt(Stmt::Seq{first, parse_stmts()});
        }
        return first;
    }

    StmtPtr parse_block() {
        if (at(Tok::lbrace)) {
            eat();
            StmtPtr s = at(Tok::rbrace) ? make_stmt(Stmt::Skip{}) : parse_stmts();
            expect(Tok::rbrace, "'}'");
            return s;
        }
        return parse_stmt();
    }

    StmtPtr parse_stmt() {
        if (at_word("skip")) {
            eat();
            return make_stmt(Stmt::Skip{});
        }
        if (at_word("throw")) {
            eat();
            return make_stmt(Stmt::Throw{});
        }
        if (at_word("require")) {
            eat();
            ExprPtr cond = parse_expr();
            return make_stmt(
                Stmt::If{cond, make_stmt(Stmt::Skip{}), make_stmt(Stmt::Throw{})});
        }
        if (at_word("if")) {
            eat();
            ExprPtr cond = parse_expr();
            expect_word("then");
            StmtPtr then_branch = parse_block();
            StmtPtr else_branch = make_stmt(Stmt::Skip{});
            if (at_word("else")) {
                eat();
                else_branch = parse_block();
            }
            return make_stmt(Stmt::If{cond, then_branch, else_branch});
        }
        if (at_word("send")) {
            eat();
            expect(Tok::lparen, "'('");
            ExprPtr amount = parse_expr();
            expect(Tok::comma, "','");
            ExprPtr recipient = parse_expr();
            expect(Tok::rparen, "')'");
            return make_stmt(Stmt::Send{amount, recipient});
        }
        Token t = cur();
        KeyExpr target = parse_key();
        if (target.base == "balance" && target.indices.empty())
            throw ParseError(t.line, t.col, "the native balance slot cannot be assigned");
        expect(Tok::assign, "':='");
        return make_stmt(Stmt::Assign{std::move(target), parse_expr()});
    }

    KeyExpr parse_key() {
        Token t = cur();
        KeyExpr k;
        k.base = expect_name("key name");
        while (at(Tok::lbracket)) {
            eat();
            k.indices.push_back(parse_expr());
            expect(Tok::rbracket, "']'");
        }
        auto [it, fresh] = arity_->emplace(k.base, k.indices.size());
        if (!fresh && it->second != k.indices.size())
            throw ArityError(t.line, t.col,
                             "key '" + k.base + "' used with " + std::to_string(k.indices.size()) +
                                 " indices, previously " + std::to_string(it->second));
        return k;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (at(Tok::lor)) {
            eat();
            e = make_expr(Expr::Bin{BinOp::lor, e, parse_and()});
        }
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_cmp();
        while (at(Tok::land)) {
            eat();
            e = make_expr(Expr::Bin{BinOp::land, e, parse_cmp()});
        }
        return e;
    }

    // Comparisons do not chain.
    ExprPtr parse_cmp() {
        ExprPtr e = parse_add();
        BinOp op;
        switch (cur().kind) {
            case Tok::eq: op = BinOp::eq; break;
            case Tok::ne: op = BinOp::ne; break;
            case Tok::lt: op = BinOp::lt; break;
            case Tok::le: op = BinOp::le; break;
            case Tok::gt: op = BinOp::gt; break;
            case Tok::ge: op = BinOp::ge; break;
            default: return e;
        }
        eat();
        return make_expr(Expr::Bin{op, e, parse_add()});
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_unary();
        while (at(Tok::plus) || at(Tok::minus)) {
            BinOp op = at(Tok::plus) ? BinOp::add : BinOp::sub;
            eat();
            e = make_expr(Expr::Bin{op, e, parse_unary()});
        }
        return e;
    }

    ExprPtr parse_unary() {
        if (at_word("not")) {
            eat();
            return make_expr(Expr::Not{parse_unary()});
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        Token t = cur();
        switch (t.kind) {
            case Tok::number:
                eat();
                return make_expr(Expr::Lit{Value::integer(Int(t.text))});
            case Tok::at_name:
                eat();
                return make_expr(Expr::Lit{Value::address(account(t.text))});
            case Tok::bang:
                eat();
                return make_expr(Expr::Lookup{parse_key()});
            case Tok::lparen: {
                eat();
                ExprPtr e = parse_expr();
                expect(Tok::rparen, "')'");
                return e;
            }
            case Tok::ident:
                if (t.text == "true" || t.text == "false") {
                    eat();
                    return make_expr(Expr::Lit{Value::boolean(t.text == "true")});
                }
                if (t.text == "sender") {
                    eat();
                    return make_expr(Expr::Sender{});
                }
                if (t.text == "value") {
                    eat();
                    return make_expr(Expr::CallValue{});
                }
                if (keywords().count(t.text))
                    throw ParseError(t.line, t.col, "'" + t.text + "' is reserved");
                eat();
                return make_expr(Expr::Param{t.text});
            default: throw ParseError(t.line, t.col, "expected an expression");
        }
    }
};

}  // namespace detail

// Parses zero or more contract definitions from one source text.
inline std::vector<Contract> parse_contracts(std::string_view src) {
    return detail::Parser(src).parse_file();
}

// Parses exactly one contract definition.
inline Contract parse_contract(std::string_view src) {
    auto all = parse_contracts(src);
    if (all.size() != 1)
        throw ParseError(1, 1, "expected exactly one contract, found " + std::to_string(all.size()));
    return std::move(all.front());
}

}  // namespace txpar
