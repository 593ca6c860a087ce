#pragma once

#include <span>
#include <vector>

#include "bct/expr.hpp"

namespace bct::expr {

// Flattens one or more expression DAGs into a shared instruction tape;
// common subtrees are evaluated once. Evaluation is allocation-free and
// thread-safe (per-thread scratch).
class Compiled {
  public:
    Compiled() = default;
    static Compiled build(std::span<const Expr> exprs);
    static Compiled build(std::initializer_list<Expr> exprs) {
        std::vector<Expr> v(exprs);
        return build(std::span<const Expr>(v));
    }

    std::size_t outputs() const { return out_slots_.size(); }
    void eval(std::span<const double> vars, double* out) const;
    double eval_single(std::span<const double> vars) const {
        double v;
        eval(vars, &v);
        return v;
    }

  private:
    struct Ins {
        NodeKind op;
        Fun fun;
        std::int32_t a = -1, b = -1;
        std::int32_t var = -1;
        double value = 0.0;
    };
    std::vector<Ins> code_;
    std::vector<std::int32_t> out_slots_;
};

}  // namespace bct::expr
