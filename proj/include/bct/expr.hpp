#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bct/errors.hpp"

namespace bct::expr {

enum class NodeKind {
    Constant,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Fun,
};

enum class Fun { Sin, Cos, Sinh, Cosh, Tanh, Exp, Ln, Sqrt, Asinh };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;       // Constant
    int var = -1;             // Variable index
    std::string var_name;     // Variable spelling, kept for printing
    Fun fun = Fun::Sin;       // Fun
    NodePtr a, b;             // operands
    std::uint32_t tree_size = 1;  // saturating node count, picks the eval path
};

// Immutable expression over a fixed variable set. Construction goes through
// parse() or the combinators below; evaluation is pure and thread-safe.
class Expr {
  public:
    Expr() = default;
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    bool valid() const { return node_ != nullptr; }
    const NodePtr& node() const { return node_; }

    double evaluate(std::span<const double> point) const;
    Expr differentiate(int var) const;
    std::string print() const;

    // True when the node is a literal constant (used for the power rule).
    bool is_constant(double* out = nullptr) const;

  private:
    NodePtr node_;
};

Expr constant(double v);
Expr variable(int index, std::string name);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr apply(Fun f, const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr sinh(const Expr& a);
Expr cosh(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sqrt(const Expr& a);

// Pratt parser over the given variable names. Precedence: ^ above unary
// minus above *,/ above +,-; same-precedence operators associate left;
// no implicit multiplication.
Expr parse(const std::string& source, const std::vector<std::string>& variables);

}  // namespace bct::expr
