// Copyright (c) szbf contributors.
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace szbf {

/// Thrown by parse_expr on malformed input. offset() is the byte offset of
/// the first offending character in the original string.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Thrown when evaluation leaves the domain of an operation (log of a
/// non-positive value, sqrt of a negative, division by zero, fractional
/// power of a negative base) or produces a non-finite intermediate.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& msg, std::string subexpression);
    const std::string& subexpression() const noexcept { return subexpr_; }

private:
    std::string subexpr_;
};

enum class UnaryOp : std::uint8_t { Neg, Sin, Cos, Exp, Log, Sqrt, Tanh, Abs };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

/// Immutable scalar expression over variables x1..xn. Copies are cheap
/// (shared subtrees); all construction goes through the factories below,
/// which fold constants where the fold is exact and domain-safe.
class Expr {
public:
    Expr();  // the constant 0

    static Expr number(double value);
    static Expr variable(int index);  // 1-based, matching the surface syntax x1..xn
    static Expr unary(UnaryOp op, Expr operand);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

    /// Evaluate at a point (point[i] is the value of x(i+1)). Throws
    /// EvalError on domain violations or non-finite results.
    double eval(std::span<const double> point) const;

    /// Symbolic partial derivative with respect to x<index>. The result is
    /// folded but not otherwise simplified.
    Expr diff(int index) const;

    /// Render with minimal parentheses; parse_expr(str(), n) always
    /// round-trips to an expression that evaluates identically.
    std::string str() const;

    /// Largest variable index that occurs (0 for constants).
    int max_variable() const noexcept;

    /// Value if this node is a literal constant.
    std::optional<double> constant_value() const noexcept;

    struct Node;
    const Node& node() const noexcept { return *node_; }

private:
    using NodePtr = std::shared_ptr<const Node>;
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& e);

Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);
Expr sqrt(const Expr& e);
Expr tanh(const Expr& e);
Expr abs(const Expr& e);

/// All partial derivatives (d/dx1 .. d/dxdim).
std::vector<Expr> gradient(const Expr& e, int dim);

/// Parse the surface syntax: numbers (decimal or scientific), variables
/// x1..x<dim>, + - * / ^ with the usual precedence (^ binds tightest and
/// associates right, unary minus sits between ^ and *), parentheses, and
/// the functions sin cos exp log sqrt tanh abs.
Expr parse_expr(std::string_view text, int dim);

/// Flat postfix tape compiled from an Expr. Evaluates the same function
/// with the same operation order and the same error conditions as
/// Expr::eval, just without pointer chasing; use in hot loops. The
/// two-argument eval reuses caller scratch so per-thread buffers stay
/// out of the type.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& e);

    double eval(std::span<const double> point) const;
    double eval(std::span<const double> point, std::vector<double>& stack) const;
    int max_variable() const noexcept { return max_var_; }

private:
    struct Instr {
        std::uint8_t opcode;
        std::int32_t arg;
        double value;
    };
    std::vector<Instr> tape_;
    int max_var_ = 0;
    std::size_t depth_ = 0;
};

}  // namespace szbf
