#pragma once

// Symbolic expressions in the time variable t: parsing, evaluation and
// exact differentiation of the coefficient functions that define
// time-varying systems.
//
// Grammar (EBNF):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := atom ("^" number)?
//   atom   := number | "t" | "(" expr ")" | func "(" expr ")" | "-" atom
//   func   := "exp" | "ln" | "sqrt" | "sin" | "cos"
//
// Exponents are constant by construction (the parser also accepts a sign
// so printed expressions like "x^-0.5" round-trip). Trees are immutable
// and shared; evaluating the same tree at the same t is bit-identical,
// from any number of threads.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace ltvc {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Syntax error; `offset` is the byte position in the input string.
struct parse_error : error {
    parse_error(const std::string& what, std::size_t offset_)
        : error(what + " (at byte " + std::to_string(offset_) + ")"), offset(offset_) {}
    std::size_t offset;
};

/// Domain error during evaluation (division by zero, ln of a non-positive
/// argument, ...). Carries the offending subexpression.
struct eval_error : error {
    eval_error(const std::string& what, std::string subexpr_, double at_)
        : error(what + " in \"" + subexpr_ + "\" at t=" + std::to_string(at_)),
          subexpr(std::move(subexpr_)), at(at_) {}
    std::string subexpr;
    double at;
};

namespace detail {

enum class NodeKind { constant, time, add, sub, mul, div, pow, neg, exp, ln, sqrt, sin, cos };

struct ExprNode {
    NodeKind kind;
    double value = 0.0;  // constant payload, or the exponent of pow
    std::shared_ptr<const ExprNode> lhs, rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

}  // namespace detail

class Expr {
public:
    /// Constants convert implicitly; makes synthesis formulas read naturally.
    Expr(double c) : node_(make(detail::NodeKind::constant, c)) {}
    Expr(int c) : Expr(static_cast<double>(c)) {}

    static Expr time() { return Expr(make(detail::NodeKind::time, 0.0)); }

    [[nodiscard]] double eval(double t) const;
    [[nodiscard]] Expr derivative() const;
    [[nodiscard]] std::string str() const { return print(node_, 0); }

    [[nodiscard]] bool is_constant() const { return node_->kind == detail::NodeKind::constant; }
    [[nodiscard]] double constant_value() const {
        if (!is_constant()) throw error("expression is not a constant: " + str());
        return node_->value;
    }

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& base, double exponent);
    friend Expr exp(const Expr& a);
    friend Expr ln(const Expr& a);
    friend Expr sqrt(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);
    friend Expr parse_expr(std::string_view text);

private:
    explicit Expr(detail::NodePtr node) : node_(std::move(node)) {}

    static detail::NodePtr make(detail::NodeKind kind, double value,
                                detail::NodePtr lhs = nullptr, detail::NodePtr rhs = nullptr) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = kind;
        n->value = value;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    static bool is_const(const detail::NodePtr& n, double v) {
        return n->kind == detail::NodeKind::constant && n->value == v;
    }

    // Smart constructors: fold constant subtrees, keep everything else as-is.
    // There is deliberately no general simplifier; expression equality is
    // always decided by evaluation on grids.
    static detail::NodePtr mk_add(detail::NodePtr a, detail::NodePtr b);
    static detail::NodePtr mk_sub(detail::NodePtr a, detail::NodePtr b);
    static detail::NodePtr mk_mul(detail::NodePtr a, detail::NodePtr b);
    static detail::NodePtr mk_div(detail::NodePtr a, detail::NodePtr b);
    static detail::NodePtr mk_pow(detail::NodePtr base, double e);
    static detail::NodePtr mk_neg(detail::NodePtr a);
    static detail::NodePtr mk_fun(detail::NodeKind kind, detail::NodePtr a);

    static double eval_node(const detail::ExprNode& n, double t);
    static detail::NodePtr diff_node(const detail::NodePtr& n);
    static std::string print(const detail::NodePtr& n, int parent_prec);

    detail::NodePtr node_;
};

inline detail::NodePtr Expr::mk_add(detail::NodePtr a, detail::NodePtr b) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant)
        return make(NodeKind::constant, a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return make(NodeKind::add, 0.0, std::move(a), std::move(b));
}

inline detail::NodePtr Expr::mk_sub(detail::NodePtr a, detail::NodePtr b) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant)
        return make(NodeKind::constant, a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return mk_neg(std::move(b));
    return make(NodeKind::sub, 0.0, std::move(a), std::move(b));
}

inline detail::NodePtr Expr::mk_mul(detail::NodePtr a, detail::NodePtr b) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant)
        return make(NodeKind::constant, a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make(NodeKind::constant, 0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return make(NodeKind::mul, 0.0, std::move(a), std::move(b));
}

inline detail::NodePtr Expr::mk_div(detail::NodePtr a, detail::NodePtr b) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant && b->kind == NodeKind::constant && b->value != 0.0)
        return make(NodeKind::constant, a->value / b->value);
    if (is_const(a, 0.0)) return make(NodeKind::constant, 0.0);
    if (is_const(b, 1.0)) return a;
    return make(NodeKind::div, 0.0, std::move(a), std::move(b));
}

inline detail::NodePtr Expr::mk_pow(detail::NodePtr base, double e) {
    using detail::NodeKind;
    if (e == 1.0) return base;
    if (e == 0.0) return make(NodeKind::constant, 1.0);
    if (base->kind == NodeKind::constant) {
        double v = std::pow(base->value, e);
        if (std::isfinite(v)) return make(NodeKind::constant, v);
    }
    return make(NodeKind::pow, e, std::move(base));
}

inline detail::NodePtr Expr::mk_neg(detail::NodePtr a) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant) return make(NodeKind::constant, -a->value);
    if (a->kind == NodeKind::neg) return a->lhs;
    return make(NodeKind::neg, 0.0, std::move(a));
}

inline detail::NodePtr Expr::mk_fun(detail::NodeKind kind, detail::NodePtr a) {
    using detail::NodeKind;
    if (a->kind == NodeKind::constant) {
        double v = a->value;
        double r = kind == NodeKind::exp    ? std::exp(v)
                   : kind == NodeKind::ln   ? std::log(v)
                   : kind == NodeKind::sqrt ? std::sqrt(v)
                   : kind == NodeKind::sin  ? std::sin(v)
                                            : std::cos(v);
        if (std::isfinite(r)) return make(NodeKind::constant, r);
    }
    return make(kind, 0.0, std::move(a));
}

inline Expr operator+(const Expr& a, const Expr& b) { return Expr(Expr::mk_add(a.node_, b.node_)); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr(Expr::mk_sub(a.node_, b.node_)); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr(Expr::mk_mul(a.node_, b.node_)); }
inline Expr operator/(const Expr& a, const Expr& b) { return Expr(Expr::mk_div(a.node_, b.node_)); }
inline Expr operator-(const Expr& a) { return Expr(Expr::mk_neg(a.node_)); }
inline Expr pow(const Expr& base, double exponent) { return Expr(Expr::mk_pow(base.node_, exponent)); }
inline Expr exp(const Expr& a) { return Expr(Expr::mk_fun(detail::NodeKind::exp, a.node_)); }
inline Expr ln(const Expr& a) { return Expr(Expr::mk_fun(detail::NodeKind::ln, a.node_)); }
inline Expr sqrt(const Expr& a) { return Expr(Expr::mk_fun(detail::NodeKind::sqrt, a.node_)); }
inline Expr sin(const Expr& a) { return Expr(Expr::mk_fun(detail::NodeKind::sin, a.node_)); }
inline Expr cos(const Expr& a) { return Expr(Expr::mk_fun(detail::NodeKind::cos, a.node_)); }

inline double Expr::eval_node(const detail::ExprNode& n, double t) {
    using detail::NodeKind;
    switch (n.kind) {
        case NodeKind::constant: return n.value;
        case NodeKind::time: return t;
        case NodeKind::add: return eval_node(*n.lhs, t) + eval_node(*n.rhs, t);
        case NodeKind::sub: return eval_node(*n.lhs, t) - eval_node(*n.rhs, t);
        case NodeKind::mul: return eval_node(*n.lhs, t) * eval_node(*n.rhs, t);
        case NodeKind::div: {
            double num = eval_node(*n.lhs, t);
            double den = eval_node(*n.rhs, t);
            if (den == 0.0)
                throw eval_error("division by zero", print(n.rhs, 0), t);
            return num / den;
        }
        case NodeKind::pow: {
            double base = eval_node(*n.lhs, t);
            if (base == 0.0 && n.value < 0.0)
                throw eval_error("zero base with negative exponent", print(n.lhs, 0), t);
            if (base < 0.0 && n.value != std::floor(n.value))
                throw eval_error("negative base with non-integer exponent", print(n.lhs, 0), t);
            return std::pow(base, n.value);
        }
        case NodeKind::neg: return -eval_node(*n.lhs, t);
        case NodeKind::exp: return std::exp(eval_node(*n.lhs, t));
        case NodeKind::ln: {
            double a = eval_node(*n.lhs, t);
            if (a <= 0.0) throw eval_error("ln of non-positive argument", print(n.lhs, 0), t);
            return std::log(a);
        }
        case NodeKind::sqrt: {
            double a = eval_node(*n.lhs, t);
            if (a < 0.0) throw eval_error("sqrt of negative argument", print(n.lhs, 0), t);
            return std::sqrt(a);
        }
        case NodeKind::sin: return std::sin(eval_node(*n.lhs, t));
        case NodeKind::cos: return std::cos(eval_node(*n.lhs, t));
    }
    throw error("corrupt expression node");
}

inline double Expr::eval(double t) const { return eval_node(*node_, t); }

inline detail::NodePtr Expr::diff_node(const detail::NodePtr& n) {
    using detail::NodeKind;
    switch (n->kind) {
        case NodeKind::constant: return make(NodeKind::constant, 0.0);
        case NodeKind::time: return make(NodeKind::constant, 1.0);
        case NodeKind::add: return mk_add(diff_node(n->lhs), diff_node(n->rhs));
        case NodeKind::sub: return mk_sub(diff_node(n->lhs), diff_node(n->rhs));
        case NodeKind::mul:
            return mk_add(mk_mul(diff_node(n->lhs), n->rhs), mk_mul(n->lhs, diff_node(n->rhs)));
        case NodeKind::div:
            // (u/v)' = (u'v - uv') / v^2
            return mk_div(mk_sub(mk_mul(diff_node(n->lhs), n->rhs), mk_mul(n->lhs, diff_node(n->rhs))),
                          mk_pow(n->rhs, 2.0));
        case NodeKind::pow:
            // (u^e)' = e * u^(e-1) * u'
            return mk_mul(mk_mul(make(NodeKind::constant, n->value), mk_pow(n->lhs, n->value - 1.0)),
                          diff_node(n->lhs));
        case NodeKind::neg: return mk_neg(diff_node(n->lhs));
        case NodeKind::exp: return mk_mul(make(NodeKind::exp, 0.0, n->lhs), diff_node(n->lhs));
        case NodeKind::ln: return mk_div(diff_node(n->lhs), n->lhs);
        case NodeKind::sqrt:
            return mk_div(diff_node(n->lhs),
                          mk_mul(make(NodeKind::constant, 2.0), make(NodeKind::sqrt, 0.0, n->lhs)));
        case NodeKind::sin: return mk_mul(make(NodeKind::cos, 0.0, n->lhs), diff_node(n->lhs));
        case NodeKind::cos:
            return mk_neg(mk_mul(make(NodeKind::sin, 0.0, n->lhs), diff_node(n->lhs)));
    }
    throw error("corrupt expression node");
}

inline Expr Expr::derivative() const { return Expr(diff_node(node_)); }

inline Expr differentiate(const Expr& e) { return e.derivative(); }

// Precedence levels: add/sub 1, mul/div 2, unary minus 3, pow 4.
inline std::string Expr::print(const detail::NodePtr& n, int parent_prec) {
    using detail::NodeKind;
    std::string s;
    int prec = 5;
    switch (n->kind) {
        case NodeKind::constant: {
            s = detail::format_double(n->value);
            if (n->value < 0.0) prec = 3;
            break;
        }
        case NodeKind::time: s = "t"; break;
        case NodeKind::add: prec = 1; s = print(n->lhs, 1) + "+" + print(n->rhs, 2); break;
        case NodeKind::sub: prec = 1; s = print(n->lhs, 1) + "-" + print(n->rhs, 2); break;
        case NodeKind::mul: prec = 2; s = print(n->lhs, 2) + "*" + print(n->rhs, 3); break;
        case NodeKind::div: prec = 2; s = print(n->lhs, 2) + "/" + print(n->rhs, 3); break;
        case NodeKind::pow: prec = 4; s = print(n->lhs, 5) + "^" + detail::format_double(n->value); break;
        case NodeKind::neg: prec = 3; s = "-" + print(n->lhs, 3); break;
        case NodeKind::exp: s = "exp(" + print(n->lhs, 0) + ")"; break;
        case NodeKind::ln: s = "ln(" + print(n->lhs, 0) + ")"; break;
        case NodeKind::sqrt: s = "sqrt(" + print(n->lhs, 0) + ")"; break;
        case NodeKind::sin: s = "sin(" + print(n->lhs, 0) + ")"; break;
        case NodeKind::cos: s = "cos(" + print(n->lhs, 0) + ")"; break;
    }
    if (prec < parent_prec) return "(" + s + ")";
    return s;
}

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view src) : src_(src) {}

    NodePtr parse() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw parse_error("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr e = parse_term();
        for (;;) {
            if (eat('+')) e = node(NodeKind::add, e, parse_term());
            else if (eat('-')) e = node(NodeKind::sub, e, parse_term());
            else return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_factor();
        for (;;) {
            if (eat('*')) e = node(NodeKind::mul, e, parse_factor());
            else if (eat('/')) e = node(NodeKind::div, e, parse_factor());
            else return e;
        }
    }

    NodePtr parse_factor() {
        NodePtr base = parse_atom();
        if (eat('^')) {
            skip_ws();
            double sign = 1.0;
            if (pos_ < src_.size() && src_[pos_] == '-') {
                sign = -1.0;
                ++pos_;
                skip_ws();
            }
            if (pos_ >= src_.size() || !is_digit(src_[pos_]))
                throw parse_error("non-constant exponent: expected a number after '^'", pos_);
            double e = sign * parse_number();
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::pow;
            n->value = e;
            n->lhs = base;
            return n;
        }
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw parse_error("unexpected end of expression", pos_);
        char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            return node(NodeKind::neg, parse_atom(), nullptr);
        }
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!eat(')')) throw parse_error("expected ')'", pos_);
            return e;
        }
        if (is_digit(c)) {
            double v = parse_number();
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::constant;
            n->value = v;
            return n;
        }
        if (is_alpha(c)) return parse_ident();
        throw parse_error(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_alpha(src_[pos_])) ++pos_;
        std::string_view name = src_.substr(start, pos_ - start);
        if (name == "t") {
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::time;
            return n;
        }
        NodeKind kind;
        if (name == "exp") kind = NodeKind::exp;
        else if (name == "ln") kind = NodeKind::ln;
        else if (name == "sqrt") kind = NodeKind::sqrt;
        else if (name == "sin") kind = NodeKind::sin;
        else if (name == "cos") kind = NodeKind::cos;
        else throw parse_error("unknown identifier \"" + std::string(name) + "\"", start);
        if (!eat('(')) throw parse_error("expected '(' after function name", pos_);
        NodePtr arg = parse_expr();
        if (!eat(')')) throw parse_error("expected ')'", pos_);
        return node(kind, arg, nullptr);
    }

    double parse_number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (pos_ >= src_.size() || !is_digit(src_[pos_]))
                throw parse_error("expected digits after decimal point", pos_);
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && is_digit(src_[pos_])) {
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            } else {
                pos_ = mark;  // "2e" was not an exponent; leave 'e' for the caller
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_)
            throw parse_error("malformed number", start);
        return v;
    }

    static NodePtr node(NodeKind kind, NodePtr lhs, NodePtr rhs) {
        auto n = std::make_shared<ExprNode>();
        n->kind = kind;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
};

}  // namespace detail

/// Parse an expression in the time variable t. Throws parse_error with a
/// byte offset on malformed input.
inline Expr parse_expr(std::string_view text) {
    return Expr(detail::ExprParser(text).parse());
}

}  // namespace ltvc
