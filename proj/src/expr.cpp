#include "bct/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <cstdlib>
#include <sstream>

namespace bct::expr {

namespace {

std::uint32_t subtree_size(const NodePtr& p) { return p ? p->tree_size : 0; }

NodePtr make(Node n) {
    const std::uint64_t total =
        1ull + subtree_size(n.a) + subtree_size(n.b);
    n.tree_size = total > 0xffffffffull ? 0xffffffffu : static_cast<std::uint32_t>(total);
    return std::make_shared<const Node>(std::move(n));
}

double check_finite(double v) {
    if (!std::isfinite(v)) throw DomainError("expression evaluated to a non-finite value");
    return v;
}

}  // namespace

Expr constant(double v) {
    Node n;
    n.kind = NodeKind::Constant;
    n.value = v;
    return Expr(make(std::move(n)));
}

Expr variable(int index, std::string name) {
    Node n;
    n.kind = NodeKind::Variable;
    n.var = index;
    n.var_name = std::move(name);
    return Expr(make(std::move(n)));
}

static Expr binary(NodeKind k, const Expr& a, const Expr& b) {
    Node n;
    n.kind = k;
    n.a = a.node();
    n.b = b.node();
    return Expr(make(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) { return binary(NodeKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return binary(NodeKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return binary(NodeKind::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return binary(NodeKind::Div, a, b); }
Expr pow(const Expr& a, const Expr& b) { return binary(NodeKind::Pow, a, b); }

Expr operator-(const Expr& a) {
    Node n;
    n.kind = NodeKind::Neg;
    n.a = a.node();
    return Expr(make(std::move(n)));
}

Expr apply(Fun f, const Expr& a) {
    Node n;
    n.kind = NodeKind::Fun;
    n.fun = f;
    n.a = a.node();
    return Expr(make(std::move(n)));
}

Expr sin(const Expr& a) { return apply(Fun::Sin, a); }
Expr cos(const Expr& a) { return apply(Fun::Cos, a); }
Expr sinh(const Expr& a) { return apply(Fun::Sinh, a); }
Expr cosh(const Expr& a) { return apply(Fun::Cosh, a); }
Expr exp(const Expr& a) { return apply(Fun::Exp, a); }
Expr ln(const Expr& a) { return apply(Fun::Ln, a); }
Expr sqrt(const Expr& a) { return apply(Fun::Sqrt, a); }

bool Expr::is_constant(double* out) const {
    if (!node_ || node_->kind != NodeKind::Constant) return false;
    if (out) *out = node_->value;
    return true;
}

namespace {

// Differentiation shares subtrees aggressively, so evaluation works on the
// DAG: values of multiply-referenced nodes are memoized per call.
using EvalMemo = std::unordered_map<const Node*, double>;

double eval_node(const Node* n, std::span<const double> p, EvalMemo* memo);

double eval_child(const NodePtr& c, std::span<const double> p, EvalMemo* memo) {
    if (memo && c.use_count() > 1) {
        auto it = memo->find(c.get());
        if (it != memo->end()) return it->second;
        const double v = eval_node(c.get(), p, memo);
        memo->emplace(c.get(), v);
        return v;
    }
    return eval_node(c.get(), p, memo);
}

double eval_node(const Node* n, std::span<const double> p, EvalMemo* memo) {
    switch (n->kind) {
        case NodeKind::Constant:
            return n->value;
        case NodeKind::Variable:
            return p[static_cast<std::size_t>(n->var)];
        case NodeKind::Add:
            return check_finite(eval_child(n->a, p, memo) + eval_child(n->b, p, memo));
        case NodeKind::Sub:
            return check_finite(eval_child(n->a, p, memo) - eval_child(n->b, p, memo));
        case NodeKind::Mul:
            return check_finite(eval_child(n->a, p, memo) * eval_child(n->b, p, memo));
        case NodeKind::Div: {
            const double den = eval_child(n->b, p, memo);
            if (den == 0.0) throw DomainError("division by zero");
            return check_finite(eval_child(n->a, p, memo) / den);
        }
        case NodeKind::Pow: {
            const double base = eval_child(n->a, p, memo);
            const double ex = eval_child(n->b, p, memo);
            const double r = std::pow(base, ex);
            if (std::isnan(r)) throw DomainError("pow outside the real domain");
            return check_finite(r);
        }
        case NodeKind::Neg:
            return -eval_child(n->a, p, memo);
        case NodeKind::Fun: {
            const double x = eval_child(n->a, p, memo);
            switch (n->fun) {
                case Fun::Sin: return std::sin(x);
                case Fun::Cos: return std::cos(x);
                case Fun::Sinh: return check_finite(std::sinh(x));
                case Fun::Cosh: return check_finite(std::cosh(x));
                case Fun::Tanh: return std::tanh(x);
                case Fun::Exp: return check_finite(std::exp(x));
                case Fun::Ln:
                    if (x <= 0.0) throw DomainError("ln of a non-positive value");
                    return std::log(x);
                case Fun::Sqrt:
                    if (x < 0.0) throw DomainError("sqrt of a negative value");
                    return std::sqrt(x);
                case Fun::Asinh: return std::asinh(x);
            }
            return 0.0;
        }
    }
    return 0.0;
}

}  // namespace

double Expr::evaluate(std::span<const double> point) const {
    if (node_->tree_size < 256) return eval_node(node_.get(), point, nullptr);
    thread_local EvalMemo memo;
    memo.clear();
    return eval_node(node_.get(), point, &memo);
}

static Expr diff_node(const NodePtr& n, int var);

static Expr wrap(const NodePtr& n) { return Expr(n); }

// Derivative assembly drops additive/multiplicative identities so the
// resulting DAG stays close to the input size.
static bool is_const(const Expr& e, double v) {
    double c;
    return e.is_constant(&c) && c == v;
}

static Expr sadd(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    double ca, cb;
    if (a.is_constant(&ca) && b.is_constant(&cb)) return constant(ca + cb);
    return a + b;
}

static Expr ssub(const Expr& a, const Expr& b) {
    if (is_const(b, 0.0)) return a;
    double ca, cb;
    if (a.is_constant(&ca) && b.is_constant(&cb)) return constant(ca - cb);
    if (is_const(a, 0.0)) return -b;
    return a - b;
}

static Expr smul(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    double ca, cb;
    if (a.is_constant(&ca) && b.is_constant(&cb)) return constant(ca * cb);
    return a * b;
}

static Expr sdiv(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0)) return constant(0.0);
    if (is_const(b, 1.0)) return a;
    return a / b;
}

static Expr sneg(const Expr& a) {
    if (is_const(a, 0.0)) return constant(0.0);
    return -a;
}

static Expr diff_node(const NodePtr& np, int var) {
    const Node* n = np.get();
    switch (n->kind) {
        case NodeKind::Constant:
            return constant(0.0);
        case NodeKind::Variable:
            return constant(n->var == var ? 1.0 : 0.0);
        case NodeKind::Add:
            return sadd(diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::Sub:
            return ssub(diff_node(n->a, var), diff_node(n->b, var));
        case NodeKind::Mul:
            return sadd(smul(diff_node(n->a, var), wrap(n->b)),
                        smul(wrap(n->a), diff_node(n->b, var)));
        case NodeKind::Div:
            return sdiv(ssub(smul(diff_node(n->a, var), wrap(n->b)),
                             smul(wrap(n->a), diff_node(n->b, var))),
                        smul(wrap(n->b), wrap(n->b)));
        case NodeKind::Pow: {
            const Expr base = wrap(n->a), ex = wrap(n->b);
            double c = 0.0;
            if (ex.is_constant(&c)) {
                // power rule keeps negative bases legal for integer exponents
                return smul(smul(constant(c), pow(base, constant(c - 1.0))),
                            diff_node(n->a, var));
            }
            // general case through exp(b ln a)
            return smul(pow(base, ex), sadd(smul(diff_node(n->b, var), ln(base)),
                                            sdiv(smul(ex, diff_node(n->a, var)), base)));
        }
        case NodeKind::Neg:
            return sneg(diff_node(n->a, var));
        case NodeKind::Fun: {
            const Expr u = wrap(n->a);
            const Expr du = diff_node(n->a, var);
            double dc = 0.0;
            if (du.is_constant(&dc) && dc == 0.0) return constant(0.0);
            switch (n->fun) {
                case Fun::Sin: return smul(cos(u), du);
                case Fun::Cos: return sneg(smul(sin(u), du));
                case Fun::Sinh: return smul(cosh(u), du);
                case Fun::Cosh: return smul(sinh(u), du);
                case Fun::Tanh: {
                    const Expr t = apply(Fun::Tanh, u);
                    return smul(ssub(constant(1.0), smul(t, t)), du);
                }
                case Fun::Exp: return smul(exp(u), du);
                case Fun::Ln: return sdiv(du, u);
                case Fun::Sqrt: return sdiv(du, smul(constant(2.0), sqrt(u)));
                case Fun::Asinh: return sdiv(du, sqrt(sadd(smul(u, u), constant(1.0))));
            }
            return Expr();
        }
    }
    return Expr();
}

Expr Expr::differentiate(int var) const { return diff_node(node_, var); }

static void print_node(const Node* n, std::ostream& os) {
    switch (n->kind) {
        case NodeKind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n->value);
            os << buf;
            return;
        }
        case NodeKind::Variable:
            os << n->var_name;
            return;
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div:
        case NodeKind::Pow: {
            const char* op = n->kind == NodeKind::Add   ? "+"
                             : n->kind == NodeKind::Sub ? "-"
                             : n->kind == NodeKind::Mul ? "*"
                             : n->kind == NodeKind::Div ? "/"
                                                        : "^";
            os << '(';
            print_node(n->a.get(), os);
            os << op;
            print_node(n->b.get(), os);
            os << ')';
            return;
        }
        case NodeKind::Neg:
            os << "(-";
            print_node(n->a.get(), os);
            os << ')';
            return;
        case NodeKind::Fun: {
            static const char* names[] = {"sin",  "cos", "sinh", "cosh", "tanh",
                                          "exp", "ln",  "sqrt", "asinh"};
            os << names[static_cast<int>(n->fun)] << '(';
            print_node(n->a.get(), os);
            os << ')';
            return;
        }
    }
}

std::string Expr::print() const {
    std::ostringstream os;
    print_node(node_.get(), os);
    return os.str();
}

// ---------------------------------------------------------------------------
// Pratt parser

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    double number = 0.0;
    std::string text;
    std::size_t offset = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) pos_++;
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            tok_.number = std::strtod(begin, &end);
            if (end == begin) throw SyntaxError("malformed number", pos_);
            tok_.kind = Tok::Number;
            pos_ += static_cast<std::size_t>(end - begin);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                pos_++;
            tok_.kind = Tok::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        switch (c) {
            case '+': tok_.kind = Tok::Plus; break;
            case '-': tok_.kind = Tok::Minus; break;
            case '*': tok_.kind = Tok::Star; break;
            case '/': tok_.kind = Tok::Slash; break;
            case '^': tok_.kind = Tok::Caret; break;
            case '(': tok_.kind = Tok::LParen; break;
            case ')': tok_.kind = Tok::RParen; break;
            default: throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
        }
        pos_++;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    Token tok_;
};

constexpr int BP_ADD = 10;
constexpr int BP_MUL = 20;
constexpr int BP_NEG = 30;
constexpr int BP_POW = 40;

int left_binding_power(Tok t) {
    switch (t) {
        case Tok::Plus:
        case Tok::Minus: return BP_ADD;
        case Tok::Star:
        case Tok::Slash: return BP_MUL;
        case Tok::Caret: return BP_POW;
        default: return -1;
    }
}

struct Parser {
    Lexer lex;
    const std::vector<std::string>& vars;

    Parser(const std::string& src, const std::vector<std::string>& v) : lex(src), vars(v) {}

    static bool lookup_fun(const std::string& name, Fun* out) {
        static const std::pair<const char*, Fun> table[] = {
            {"sin", Fun::Sin},   {"cos", Fun::Cos},   {"sinh", Fun::Sinh},
            {"cosh", Fun::Cosh}, {"tanh", Fun::Tanh}, {"exp", Fun::Exp},
            {"ln", Fun::Ln},     {"sqrt", Fun::Sqrt}, {"asinh", Fun::Asinh}};
        for (const auto& [n, f] : table)
            if (name == n) {
                *out = f;
                return true;
            }
        return false;
    }

    Expr parse_expression(int min_bp) {
        Expr lhs = parse_prefix();
        for (;;) {
            const Tok op = lex.peek().kind;
            const int lbp = left_binding_power(op);
            if (lbp < 0 || lbp <= min_bp) break;
            lex.take();
            // same-precedence operators associate left: parse rhs at lbp
            Expr rhs = parse_expression(lbp);
            switch (op) {
                case Tok::Plus: lhs = lhs + rhs; break;
                case Tok::Minus: lhs = lhs - rhs; break;
                case Tok::Star: lhs = lhs * rhs; break;
                case Tok::Slash: lhs = lhs / rhs; break;
                case Tok::Caret: lhs = pow(lhs, rhs); break;
                default: break;
            }
        }
        return lhs;
    }

    Expr parse_prefix() {
        Token t = lex.take();
        switch (t.kind) {
            case Tok::Number: return constant(t.number);
            case Tok::Minus: return -parse_expression(BP_NEG - 1);
            case Tok::LParen: {
                Expr inner = parse_expression(0);
                if (lex.peek().kind != Tok::RParen)
                    throw SyntaxError("expected ')'", lex.peek().offset);
                lex.take();
                return inner;
            }
            case Tok::Ident: {
                Fun f;
                if (lookup_fun(t.text, &f)) {
                    if (lex.peek().kind != Tok::LParen)
                        throw SyntaxError("expected '(' after function name", lex.peek().offset);
                    lex.take();
                    Expr arg = parse_expression(0);
                    if (lex.peek().kind != Tok::RParen)
                        throw SyntaxError("expected ')'", lex.peek().offset);
                    lex.take();
                    return apply(f, arg);
                }
                for (std::size_t i = 0; i < vars.size(); ++i)
                    if (vars[i] == t.text) return variable(static_cast<int>(i), t.text);
                throw UnknownIdentifier(t.text, t.offset);
            }
            default:
                throw SyntaxError("expected an operand", t.offset);
        }
    }
};

}  // namespace

Expr parse(const std::string& source, const std::vector<std::string>& variables) {
    Parser p(source, variables);
    Expr e = p.parse_expression(0);
    if (p.lex.peek().kind != Tok::End)
        throw SyntaxError("trailing input after expression", p.lex.peek().offset);
    return e;
}

}  // namespace bct::expr
