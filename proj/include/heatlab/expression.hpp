#pragma once

// Scalar expressions in one variable `s`: parsing, printing and evaluation.
//
// Grammar (whitespace is ignored between tokens):
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := '-' unary | power
//   power   := primary [ '^' unary ]              (right associative)
//   primary := number | 's' | 'e' | func '(' args ')' | '(' expr ')'
//   func    := 'log' | 'exp' | 'max'
//   args    := expr { ',' expr }                  (log/exp take one, max >= 2)
//   number  := digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ]

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace heatlab {

class ParseError : public std::runtime_error {
public:
    ParseError(std::string const& message, std::size_t offset)
        : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DomainError : public std::runtime_error {
public:
    DomainError(std::string const& message, double s)
        : std::runtime_error(message + " (s = " + std::to_string(s) + ")"), s_(s) {}

    double at() const noexcept { return s_; }

private:
    double s_;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace expr_detail {

enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Log, Exp, Max };

struct Node {
    Op op;
    double value = 0.0;
    std::vector<std::shared_ptr<Node const>> kids;
};

using NodePtr = std::shared_ptr<Node const>;

inline NodePtr make_leaf(Op op, double value = 0.0) {
    return std::make_shared<Node const>(Node{op, value, {}});
}

inline NodePtr make_node(Op op, std::vector<NodePtr> kids) {
    return std::make_shared<Node const>(Node{op, 0.0, std::move(kids)});
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        auto root = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return root;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(std::string const& what) const { throw ParseError(what, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n'))
            ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            skip_ws();
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_node(Op::Add, {lhs, term()});
            else if (accept('-'))
                lhs = make_node(Op::Sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_node(Op::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = make_node(Op::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_node(Op::Neg, {unary()});
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make_node(Op::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (c == '(') {
            ++pos_;
            auto inner = expr();
            expect(')');
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            std::string_view id = text_.substr(start, pos_ - start);
            if (id == "s") return make_leaf(Op::Variable);
            if (id == "e") return make_leaf(Op::Constant, std::numbers::e);
            if (id == "log" || id == "exp" || id == "max") return call(id, start);
            pos_ = start;
            fail("unknown identifier '" + std::string(id) + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr call(std::string_view name, std::size_t start) {
        expect('(');
        std::vector<NodePtr> args{expr()};
        while (accept(',')) args.push_back(expr());
        expect(')');
        if (name == "max") {
            if (args.size() < 2) {
                pos_ = start;
                fail("max needs at least two arguments");
            }
            return make_node(Op::Max, std::move(args));
        }
        if (args.size() != 1) {
            pos_ = start;
            fail(std::string(name) + " takes exactly one argument");
        }
        return make_node(name == "log" ? Op::Log : Op::Exp, std::move(args));
    }

    NodePtr number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_, ++n;
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) fail("malformed number");
        // An exponent only counts when digits follow; otherwise `2e` would swallow Euler's e.
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        double value = 0.0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{}) {
            pos_ = start;
            fail("malformed number");
        }
        return make_leaf(Op::Constant, value);
    }
};

inline int precedence(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

inline void print(Node const& n, std::string& out);

inline void print_child(Node const& child, int min_prec, std::string& out) {
    bool wrap = precedence(child.op) < min_prec;
    if (wrap) out += '(';
    print(child, out);
    if (wrap) out += ')';
}

inline void print(Node const& n, std::string& out) {
    switch (n.op) {
    case Op::Constant:
        if (n.value == std::numbers::e)
            out += 'e';
        else if (n.value < 0.0)
            out += "(" + format_number(n.value) + ")";
        else
            out += format_number(n.value);
        return;
    case Op::Variable: out += 's'; return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        int p = precedence(n.op);
        print_child(*n.kids[0], p, out);
        out += n.op == Op::Add ? "+" : n.op == Op::Sub ? "-" : n.op == Op::Mul ? "*" : "/";
        // Left-associative: a right operand of equal precedence needs parentheses.
        print_child(*n.kids[1], p + 1, out);
        return;
    }
    case Op::Pow:
        print_child(*n.kids[0], 5, out);
        out += '^';
        print_child(*n.kids[1], 3, out);
        return;
    case Op::Neg:
        out += '-';
        print_child(*n.kids[0], 3, out);
        return;
    case Op::Log:
    case Op::Exp:
    case Op::Max: {
        out += n.op == Op::Log ? "log(" : n.op == Op::Exp ? "exp(" : "max(";
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
            if (i) out += ',';
            print(*n.kids[i], out);
        }
        out += ')';
        return;
    }
    }
}

inline double eval(Node const& n, double s) {
    switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Variable: return s;
    case Op::Add: return eval(*n.kids[0], s) + eval(*n.kids[1], s);
    case Op::Sub: return eval(*n.kids[0], s) - eval(*n.kids[1], s);
    case Op::Mul: {
        double a = eval(*n.kids[0], s);
        double b = eval(*n.kids[1], s);
        // 0 * inf arises from overflowing factors multiplied by an exact zero; the product is 0.
        if (a == 0.0 || b == 0.0) return 0.0;
        return a * b;
    }
    case Op::Div: {
        double a = eval(*n.kids[0], s);
        double b = eval(*n.kids[1], s);
        if (b == 0.0) {
            if (a == 0.0) throw DomainError("0/0 in division", s);
            throw DomainError("division by zero", s);
        }
        return a / b;
    }
    case Op::Pow: {
        double a = eval(*n.kids[0], s);
        double b = eval(*n.kids[1], s);
        if (a < 0.0 && b != std::floor(b)) throw DomainError("negative base with fractional exponent", s);
        if (a == 0.0 && b < 0.0) throw DomainError("zero raised to a negative power", s);
        return std::pow(a, b);
    }
    case Op::Neg: return -eval(*n.kids[0], s);
    case Op::Log: {
        double a = eval(*n.kids[0], s);
        if (!(a > 0.0)) throw DomainError("log of non-positive argument", s);
        return std::log(a);
    }
    case Op::Exp: return std::exp(eval(*n.kids[0], s));
    case Op::Max: {
        double m = eval(*n.kids[0], s);
        for (std::size_t i = 1; i < n.kids.size(); ++i) m = std::max(m, eval(*n.kids[i], s));
        return m;
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace expr_detail

/// Immutable parsed expression in the variable `s`. Cheap to copy.
class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text) {
        Expression e;
        e.root_ = expr_detail::Parser(text).parse();
        e.source_ = std::string(text);
        return e;
    }

    std::string const& source_text() const noexcept { return source_; }

    /// Canonical text with minimal parentheses; parse(to_string()) evaluates identically.
    std::string to_string() const {
        std::string out;
        if (root_) expr_detail::print(*root_, out);
        return out;
    }

    /// Raw value; may be negative, infinite or NaN. Throws DomainError for log/div/pow domain faults.
    double evaluate_raw(double s) const { return expr_detail::eval(*root_, s); }

    bool empty() const noexcept { return root_ == nullptr; }

    expr_detail::Node const& root() const { return *root_; }

private:
    expr_detail::NodePtr root_;
    std::string source_;
};

/// Value of a nonlinearity f(s) for s >= 0. Overflow yields +inf, which callers treat as growth evidence.
inline double eval_f(Expression const& f, double s) {
    if (!(s >= 0.0)) throw DomainError("nonlinearity evaluated at negative s", s);
    double v = f.evaluate_raw(s);
    if (std::isnan(v)) throw DomainError("nonlinearity evaluates to NaN", s);
    if (v < 0.0) throw DomainError("nonlinearity is negative", s);
    return v;
}

} // namespace heatlab
