// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
//
// Expression trees: construction with constant folding, evaluation,
// symbolic differentiation, printing, parsing, and the postfix tape.

#include "szbf/expr.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

namespace szbf {

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

EvalError::EvalError(const std::string& msg, std::string subexpression)
    : std::runtime_error(msg + " in '" + subexpression + "'"),
      subexpr_(std::move(subexpression)) {}

struct Expr::Node {
    enum class Kind : std::uint8_t { Constant, Variable, Unary, Binary } kind;
    double value = 0.0;  // Constant
    int var = 0;         // Variable, 1-based
    UnaryOp uop{};
    BinaryOp bop{};
    NodePtr a, b;
    int max_var = 0;
};

namespace {

using Node = Expr::Node;
using Kind = Expr::Node::Kind;

bool is_const(const Expr& e, double v) {
    auto c = e.constant_value();
    return c && *c == v;
}

// Exponents that are mathematically integers; pow with these is defined
// for negative bases.
bool integral_exponent(double e) {
    return std::isfinite(e) && std::trunc(e) == e && std::fabs(e) <= 9.007199254740992e15;
}

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Tanh: return "tanh";
        case UnaryOp::Abs: return "abs";
    }
    return "?";
}

}  // namespace

Expr::Expr() : Expr(number(0.0)) {}

Expr Expr::number(double value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::variable(int index) {
    if (index < 1)
        throw std::invalid_argument("variable index must be >= 1, got " + std::to_string(index));
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->var = index;
    n->max_var = index;
    return Expr(std::move(n));
}

std::optional<double> Expr::constant_value() const noexcept {
    if (node_->kind == Kind::Constant) return node_->value;
    return std::nullopt;
}

int Expr::max_variable() const noexcept { return node_->max_var; }

Expr Expr::unary(UnaryOp op, Expr operand) {
    if (op == UnaryOp::Neg) {
        // -(-e) = e, and negated literals stay literals.
        const Node& n = operand.node();
        if (n.kind == Kind::Unary && n.uop == UnaryOp::Neg) return Expr(n.a);
        if (n.kind == Kind::Constant) return number(-n.value);
    } else if (auto c = operand.constant_value()) {
        double v = *c;
        double r = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        switch (op) {
            case UnaryOp::Sin: r = std::sin(v); break;
            case UnaryOp::Cos: r = std::cos(v); break;
            case UnaryOp::Exp: r = std::exp(v); break;
            case UnaryOp::Tanh: r = std::tanh(v); break;
            case UnaryOp::Abs: r = std::fabs(v); break;
            case UnaryOp::Log: ok = v > 0.0; if (ok) r = std::log(v); break;
            case UnaryOp::Sqrt: ok = v >= 0.0; if (ok) r = std::sqrt(v); break;
            case UnaryOp::Neg: break;
        }
        if (ok && std::isfinite(r)) return number(r);
        // Domain trouble is reported at evaluation time, not during folding.
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Unary;
    n->uop = op;
    n->max_var = operand.max_variable();
    n->a = operand.node_;
    return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    auto ca = lhs.constant_value();
    auto cb = rhs.constant_value();
    if (ca && cb) {
        double r = std::numeric_limits<double>::quiet_NaN();
        bool ok = true;
        switch (op) {
            case BinaryOp::Add: r = *ca + *cb; break;
            case BinaryOp::Sub: r = *ca - *cb; break;
            case BinaryOp::Mul: r = *ca * *cb; break;
            case BinaryOp::Div: ok = *cb != 0.0; if (ok) r = *ca / *cb; break;
            case BinaryOp::Pow:
                ok = (*ca > 0.0) || (*ca == 0.0 && *cb >= 0.0) || integral_exponent(*cb);
                if (ok) r = std::pow(*ca, *cb);
                break;
        }
        if (ok && std::isfinite(r)) return number(r);
    }
    switch (op) {
        case BinaryOp::Add:
            if (is_const(lhs, 0.0)) return rhs;
            if (is_const(rhs, 0.0)) return lhs;
            break;
        case BinaryOp::Sub:
            if (is_const(rhs, 0.0)) return lhs;
            if (is_const(lhs, 0.0)) return unary(UnaryOp::Neg, rhs);
            break;
        case BinaryOp::Mul:
            if (is_const(lhs, 0.0) || is_const(rhs, 0.0)) return number(0.0);
            if (is_const(lhs, 1.0)) return rhs;
            if (is_const(rhs, 1.0)) return lhs;
            break;
        case BinaryOp::Div:
            if (is_const(rhs, 1.0)) return lhs;
            break;
        case BinaryOp::Pow:
            if (is_const(rhs, 1.0)) return lhs;
            if (is_const(rhs, 0.0)) return number(1.0);
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Binary;
    n->bop = op;
    n->max_var = std::max(lhs.max_variable(), rhs.max_variable());
    n->a = lhs.node_;
    n->b = rhs.node_;
    return Expr(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr operator-(const Expr& e) { return Expr::unary(UnaryOp::Neg, e); }

Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(BinaryOp::Pow, base, exponent); }
Expr sin(const Expr& e) { return Expr::unary(UnaryOp::Sin, e); }
Expr cos(const Expr& e) { return Expr::unary(UnaryOp::Cos, e); }
Expr exp(const Expr& e) { return Expr::unary(UnaryOp::Exp, e); }
Expr log(const Expr& e) { return Expr::unary(UnaryOp::Log, e); }
Expr sqrt(const Expr& e) { return Expr::unary(UnaryOp::Sqrt, e); }
Expr tanh(const Expr& e) { return Expr::unary(UnaryOp::Tanh, e); }
Expr abs(const Expr& e) { return Expr::unary(UnaryOp::Abs, e); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string node_str(const Node& n);

[[noreturn]] void eval_fail(const char* msg, const Node& n) {
    throw EvalError(msg, node_str(n));
}

double eval_node(const Node& n, std::span<const double> p) {
    switch (n.kind) {
        case Kind::Constant:
            return n.value;
        case Kind::Variable: {
            if (n.var > static_cast<int>(p.size()))
                eval_fail("point has too few coordinates", n);
            double v = p[static_cast<std::size_t>(n.var - 1)];
            if (!std::isfinite(v)) eval_fail("non-finite coordinate", n);
            return v;
        }
        case Kind::Unary: {
            double a = eval_node(*n.a, p);
            double r;
            switch (n.uop) {
                case UnaryOp::Neg: r = -a; break;
                case UnaryOp::Sin: r = std::sin(a); break;
                case UnaryOp::Cos: r = std::cos(a); break;
                case UnaryOp::Exp: r = std::exp(a); break;
                case UnaryOp::Tanh: r = std::tanh(a); break;
                case UnaryOp::Abs: r = std::fabs(a); break;
                case UnaryOp::Log:
                    if (a <= 0.0) eval_fail("log of a non-positive value", n);
                    r = std::log(a);
                    break;
                case UnaryOp::Sqrt:
                    if (a < 0.0) eval_fail("sqrt of a negative value", n);
                    r = std::sqrt(a);
                    break;
                default: r = 0.0; break;
            }
            if (!std::isfinite(r)) eval_fail("non-finite result", n);
            return r;
        }
        case Kind::Binary: {
            double a = eval_node(*n.a, p);
            double b = eval_node(*n.b, p);
            double r;
            switch (n.bop) {
                case BinaryOp::Add: r = a + b; break;
                case BinaryOp::Sub: r = a - b; break;
                case BinaryOp::Mul: r = a * b; break;
                case BinaryOp::Div:
                    if (b == 0.0) eval_fail("division by zero", n);
                    r = a / b;
                    break;
                case BinaryOp::Pow:
                    if (a < 0.0 && !integral_exponent(b))
                        eval_fail("fractional power of a negative base", n);
                    if (a == 0.0 && b < 0.0) eval_fail("zero raised to a negative power", n);
                    r = std::pow(a, b);
                    break;
                default: r = 0.0; break;
            }
            if (!std::isfinite(r)) eval_fail("non-finite result", n);
            return r;
        }
    }
    return 0.0;  // unreachable
}

}  // namespace

double Expr::eval(std::span<const double> point) const { return eval_node(*node_, point); }

// ---------------------------------------------------------------------------
// Differentiation

Expr Expr::diff(int index) const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Constant:
            return number(0.0);
        case Kind::Variable:
            return number(n.var == index ? 1.0 : 0.0);
        case Kind::Unary: {
            Expr u(n.a);
            Expr du = u.diff(index);
            switch (n.uop) {
                case UnaryOp::Neg: return -du;
                case UnaryOp::Sin: return cos(u) * du;
                case UnaryOp::Cos: return -(sin(u) * du);
                case UnaryOp::Exp: return exp(u) * du;
                case UnaryOp::Log: return du / u;
                case UnaryOp::Sqrt: return du / (number(2.0) * sqrt(u));
                case UnaryOp::Tanh: return (number(1.0) - pow(tanh(u), number(2.0))) * du;
                // d|u| = sign(u) du, written u/|u| so the kink at 0 surfaces
                // as a division-by-zero EvalError rather than a silent 0.
                case UnaryOp::Abs: return (u / abs(u)) * du;
            }
            return number(0.0);
        }
        case Kind::Binary: {
            Expr a(n.a), b(n.b);
            Expr da = a.diff(index);
            Expr db = b.diff(index);
            switch (n.bop) {
                case BinaryOp::Add: return da + db;
                case BinaryOp::Sub: return da - db;
                case BinaryOp::Mul: return da * b + a * db;
                case BinaryOp::Div: return (da * b - a * db) / pow(b, number(2.0));
                case BinaryOp::Pow: {
                    if (auto c = b.constant_value()) {
                        // c * a^(c-1) * a'
                        return number(*c) * pow(a, number(*c - 1.0)) * da;
                    }
                    // a^b * (b' log a + b a'/a)
                    return pow(a, b) * (db * log(a) + b * da / a);
                }
            }
            return number(0.0);
        }
    }
    return number(0.0);
}

std::vector<Expr> gradient(const Expr& e, int dim) {
    if (dim < 1) throw std::invalid_argument("gradient: dim must be >= 1");
    std::vector<Expr> g;
    g.reserve(static_cast<std::size_t>(dim));
    for (int i = 1; i <= dim; ++i) g.push_back(e.diff(i));
    return g;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels used by both the printer and the parser:
//   1  + -        (left associative)
//   2  * /        (left associative)
//   3  unary -
//   4  ^          (right associative, binds tighter than unary minus)
//   5  atoms
int node_prec(const Node& n) {
    switch (n.kind) {
        case Kind::Constant:
            return n.value < 0.0 ? 3 : 5;
        case Kind::Variable:
            return 5;
        case Kind::Unary:
            return n.uop == UnaryOp::Neg ? 3 : 5;
        case Kind::Binary:
            switch (n.bop) {
                case BinaryOp::Add:
                case BinaryOp::Sub: return 1;
                case BinaryOp::Mul:
                case BinaryOp::Div: return 2;
                case BinaryOp::Pow: return 4;
            }
    }
    return 5;
}

std::string format_double(double v) {
    std::array<char, 32> buf;
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    assert(ec == std::errc());
    return std::string(buf.data(), end);
}

void print_node(const Node& n, std::string& out, int min_prec) {
    bool parens = node_prec(n) < min_prec;
    if (parens) out += '(';
    switch (n.kind) {
        case Kind::Constant:
            out += format_double(n.value);
            break;
        case Kind::Variable:
            out += 'x';
            out += std::to_string(n.var);
            break;
        case Kind::Unary:
            if (n.uop == UnaryOp::Neg) {
                out += '-';
                print_node(*n.a, out, 3);
            } else {
                out += unary_name(n.uop);
                out += '(';
                print_node(*n.a, out, 0);
                out += ')';
            }
            break;
        case Kind::Binary: {
            const char* optext = nullptr;
            int lhs_min = 0, rhs_min = 0;
            switch (n.bop) {
                case BinaryOp::Add: optext = " + "; lhs_min = 1; rhs_min = 2; break;
                case BinaryOp::Sub: optext = " - "; lhs_min = 1; rhs_min = 2; break;
                case BinaryOp::Mul: optext = " * "; lhs_min = 2; rhs_min = 3; break;
                case BinaryOp::Div: optext = " / "; lhs_min = 2; rhs_min = 3; break;
                case BinaryOp::Pow: optext = "^"; lhs_min = 5; rhs_min = 3; break;
            }
            print_node(*n.a, out, lhs_min);
            out += optext;
            print_node(*n.b, out, rhs_min);
            break;
        }
    }
    if (parens) out += ')';
}

std::string node_str(const Node& n) {
    std::string out;
    print_node(n, out, 0);
    return out;
}

}  // namespace

std::string Expr::str() const { return node_str(*node_); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    Expr run() {
        Expr e = expression();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    // expression := term (('+'|'-') term)*
    Expr expression() {
        Expr e = term();
        for (;;) {
            skip_ws();
            if (consume('+')) e = e + term();
            else if (consume('-')) e = e - term();
            else return e;
        }
    }

    // term := unary (('*'|'/') unary)*
    Expr term() {
        Expr e = unary();
        for (;;) {
            skip_ws();
            if (consume('*')) e = e * unary();
            else if (consume('/')) e = e / unary();
            else return e;
        }
    }

    // unary := '-' unary | power
    Expr unary() {
        skip_ws();
        if (consume('-')) return -unary();
        return power();
    }

    // power := atom ('^' unary)?   (right associative)
    Expr power() {
        Expr base = atom();
        skip_ws();
        if (consume('^')) return pow(base, unary());
        return base;
    }

    Expr atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (consume('(')) {
            Expr e = expression();
            skip_ws();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected character");
    }

    Expr parse_number() {
        double v = 0.0;
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr == first) fail("malformed number");
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return Expr::number(v);
    }

    Expr identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            static constexpr std::pair<std::string_view, UnaryOp> functions[] = {
                {"sin", UnaryOp::Sin},   {"cos", UnaryOp::Cos}, {"exp", UnaryOp::Exp},
                {"log", UnaryOp::Log},   {"sqrt", UnaryOp::Sqrt},
                {"tanh", UnaryOp::Tanh}, {"abs", UnaryOp::Abs},
            };
            for (auto [fname, op] : functions) {
                if (name == fname) {
                    ++pos_;  // '('
                    Expr arg = expression();
                    skip_ws();
                    if (!consume(')')) fail("expected ')' after function argument");
                    return Expr::unary(op, arg);
                }
            }
            fail_at("unknown function '" + std::string(name) + "'", start);
        }
        if (name.size() >= 2 && name[0] == 'x') {
            int idx = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec == std::errc() && ptr == name.data() + name.size()) {
                if (idx < 1 || idx > dim_)
                    fail_at("variable index out of range: '" + std::string(name) + "' with dim " +
                                std::to_string(dim_),
                            start);
                return Expr::variable(idx);
            }
        }
        fail_at("unknown identifier '" + std::string(name) + "'", start);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) { fail_at(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t offset) {
        throw ParseError(msg, offset);
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, int dim) {
    if (dim < 0) throw std::invalid_argument("parse_expr: dim must be >= 0");
    return Parser(text, dim).run();
}

// ---------------------------------------------------------------------------
// Postfix tape

namespace {

enum : std::uint8_t {
    kPushConst,
    kPushVar,
    kUnaryBase,                      // kUnaryBase + UnaryOp
    kBinaryBase = kUnaryBase + 8,    // kBinaryBase + BinaryOp
};

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) {
    max_var_ = e.max_variable();
    std::size_t depth = 0, max_depth = 0;
    // Explicit postorder so deep trees cannot overflow the call stack here.
    std::vector<std::pair<const Expr::Node*, bool>> work{{&e.node(), false}};
    while (!work.empty()) {
        auto [n, expanded] = work.back();
        work.pop_back();
        if (!expanded) {
            work.push_back({n, true});
            if (n->kind == Kind::Binary) work.push_back({n->b.get(), false});
            if (n->kind == Kind::Unary || n->kind == Kind::Binary)
                work.push_back({n->a.get(), false});
            continue;
        }
        switch (n->kind) {
            case Kind::Constant:
                tape_.push_back({kPushConst, 0, n->value});
                ++depth;
                break;
            case Kind::Variable:
                tape_.push_back({kPushVar, n->var - 1, 0.0});
                ++depth;
                break;
            case Kind::Unary:
                tape_.push_back({static_cast<std::uint8_t>(kUnaryBase + static_cast<int>(n->uop)), 0, 0.0});
                break;
            case Kind::Binary:
                tape_.push_back({static_cast<std::uint8_t>(kBinaryBase + static_cast<int>(n->bop)), 0, 0.0});
                --depth;
                break;
        }
        max_depth = std::max(max_depth, depth);
    }
    depth_ = max_depth;
}

double CompiledExpr::eval(std::span<const double> point) const {
    std::vector<double> stack;
    return eval(point, stack);
}

double CompiledExpr::eval(std::span<const double> point, std::vector<double>& stack) const {
    if (tape_.empty()) return 0.0;
    if (max_var_ > static_cast<int>(point.size()))
        throw EvalError("point has too few coordinates", "compiled expression");
    stack.resize(depth_);
    double* sp = stack.data();
    auto fail = [](const char* msg) { throw EvalError(msg, "compiled expression"); };
    for (const Instr& ins : tape_) {
        switch (ins.opcode) {
            case kPushConst:
                *sp++ = ins.value;
                continue;
            case kPushVar: {
                double v = point[static_cast<std::size_t>(ins.arg)];
                if (!std::isfinite(v)) fail("non-finite coordinate");
                *sp++ = v;
                continue;
            }
            default: break;
        }
        double r;
        if (ins.opcode < kBinaryBase) {
            double a = sp[-1];
            switch (static_cast<UnaryOp>(ins.opcode - kUnaryBase)) {
                case UnaryOp::Neg: r = -a; break;
                case UnaryOp::Sin: r = std::sin(a); break;
                case UnaryOp::Cos: r = std::cos(a); break;
                case UnaryOp::Exp: r = std::exp(a); break;
                case UnaryOp::Tanh: r = std::tanh(a); break;
                case UnaryOp::Abs: r = std::fabs(a); break;
                case UnaryOp::Log:
                    if (a <= 0.0) fail("log of a non-positive value");
                    r = std::log(a);
                    break;
                case UnaryOp::Sqrt:
                    if (a < 0.0) fail("sqrt of a negative value");
                    r = std::sqrt(a);
                    break;
                default: r = 0.0; break;
            }
            sp[-1] = r;
        } else {
            double a = sp[-2], b = sp[-1];
            --sp;
            switch (static_cast<BinaryOp>(ins.opcode - kBinaryBase)) {
                case BinaryOp::Add: r = a + b; break;
                case BinaryOp::Sub: r = a - b; break;
                case BinaryOp::Mul: r = a * b; break;
                case BinaryOp::Div:
                    if (b == 0.0) fail("division by zero");
                    r = a / b;
                    break;
                case BinaryOp::Pow:
                    if (a < 0.0 && !integral_exponent(b))
                        fail("fractional power of a negative base");
                    if (a == 0.0 && b < 0.0) fail("zero raised to a negative power");
                    r = std::pow(a, b);
                    break;
                default: r = 0.0; break;
            }
            sp[-1] = r;
        }
        if (!std::isfinite(r)) fail("non-finite result");
    }
    return sp[-1];
}

}  // namespace szbf
