#include "bct/compiled.hpp"

#include <cmath>
#include <unordered_map>

#include "bct/errors.hpp"

namespace bct::expr {

Compiled Compiled::build(std::span<const Expr> exprs) {
    Compiled c;
    std::unordered_map<const Node*, std::int32_t> slot;

    // iterative post-order DFS over the DAG
    struct Frame {
        const Node* node;
        bool expanded;
    };
    std::vector<Frame> stack;
    auto emit = [&](const Node* n) -> std::int32_t {
        stack.push_back({n, false});
        std::int32_t last = -1;
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            auto it = slot.find(f.node);
            if (it != slot.end()) {
                last = it->second;
                continue;
            }
            if (!f.expanded) {
                stack.push_back({f.node, true});
                if (f.node->b) stack.push_back({f.node->b.get(), false});
                if (f.node->a) stack.push_back({f.node->a.get(), false});
                continue;
            }
            Ins ins;
            ins.op = f.node->kind;
            ins.fun = f.node->fun;
            ins.value = f.node->value;
            ins.var = f.node->var;
            if (f.node->a) ins.a = slot.at(f.node->a.get());
            if (f.node->b) ins.b = slot.at(f.node->b.get());
            const std::int32_t s = static_cast<std::int32_t>(c.code_.size());
            c.code_.push_back(ins);
            slot.emplace(f.node, s);
            last = s;
        }
        return last;
    };

    for (const Expr& e : exprs) c.out_slots_.push_back(emit(e.node().get()));
    return c;
}

void Compiled::eval(std::span<const double> vars, double* out) const {
    thread_local std::vector<double> scratch;
    if (scratch.size() < code_.size()) scratch.resize(code_.size());
    double* v = scratch.data();

    auto fin = [](double x) {
        if (!std::isfinite(x)) throw DomainError("expression evaluated to a non-finite value");
        return x;
    };

    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Ins& ins = code_[i];
        switch (ins.op) {
            case NodeKind::Constant: v[i] = ins.value; break;
            case NodeKind::Variable: v[i] = vars[static_cast<std::size_t>(ins.var)]; break;
            case NodeKind::Add: v[i] = fin(v[ins.a] + v[ins.b]); break;
            case NodeKind::Sub: v[i] = fin(v[ins.a] - v[ins.b]); break;
            case NodeKind::Mul: v[i] = fin(v[ins.a] * v[ins.b]); break;
            case NodeKind::Div:
                if (v[ins.b] == 0.0) throw DomainError("division by zero");
                v[i] = fin(v[ins.a] / v[ins.b]);
                break;
            case NodeKind::Pow: {
                const double r = std::pow(v[ins.a], v[ins.b]);
                if (std::isnan(r)) throw DomainError("pow outside the real domain");
                v[i] = fin(r);
                break;
            }
            case NodeKind::Neg: v[i] = -v[ins.a]; break;
            case NodeKind::Fun: {
                const double x = v[ins.a];
                switch (ins.fun) {
                    case Fun::Sin: v[i] = std::sin(x); break;
                    case Fun::Cos: v[i] = std::cos(x); break;
                    case Fun::Sinh: v[i] = fin(std::sinh(x)); break;
                    case Fun::Cosh: v[i] = fin(std::cosh(x)); break;
                    case Fun::Tanh: v[i] = std::tanh(x); break;
                    case Fun::Exp: v[i] = fin(std::exp(x)); break;
                    case Fun::Ln:
                        if (x <= 0.0) throw DomainError("ln of a non-positive value");
                        v[i] = std::log(x);
                        break;
                    case Fun::Sqrt:
                        if (x < 0.0) throw DomainError("sqrt of a negative value");
                        v[i] = std::sqrt(x);
                        break;
                    case Fun::Asinh: v[i] = std::asinh(x); break;
                }
                break;
            }
        }
    }
    for (std::size_t k = 0; k < out_slots_.size(); ++k) out[k] = v[out_slots_[k]];
}

}  // namespace bct::expr
