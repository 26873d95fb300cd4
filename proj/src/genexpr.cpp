#include "absde/genexpr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_set>

#include "absde/errors.hpp"

namespace absde {

namespace {

constexpr int kMaxDepth = 256;

NodePtr make(NodeKind k, std::vector<NodePtr> kids = {}, double value = 0.0, Var var = Var::T) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->kids = std::move(kids);
    n->value = value;
    n->var = var;
    return n;
}

class Parser {
public:
    Parser(std::string_view src, ExprContext ctx) : s_(src), ctx_(ctx) {}

    NodePtr run() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ < s_.size())
            throw ParseError(pos_, "unexpected character '" + std::string(1, s_[pos_]) + "'",
                             {"+", "-", "*", "/", "^", "end of input"});
        return e;
    }

private:
    std::string_view s_;
    ExprContext ctx_;
    std::size_t pos_ = 0;
    bool in_expect_ = false;
    int depth_ = 0;

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxDepth) throw ParseError(p.pos_, "expression nested too deeply");
        }
        ~DepthGuard() { --p.depth_; }
    };

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    // ASCII '-' or U+2212.
    std::size_t minus_len() const {
        if (pos_ < s_.size() && s_[pos_] == '-') return 1;
        if (pos_ + 3 <= s_.size() && static_cast<unsigned char>(s_[pos_]) == 0xE2 &&
            static_cast<unsigned char>(s_[pos_ + 1]) == 0x88 && static_cast<unsigned char>(s_[pos_ + 2]) == 0x92)
            return 3;
        return 0;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c)
            throw ParseError(pos_, std::string("expected '") + c + "'", {std::string(1, c)});
        ++pos_;
    }

    NodePtr expr() {
        DepthGuard g(*this);
        NodePtr lhs = term();
        for (;;) {
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '+') {
                ++pos_;
                lhs = make(NodeKind::Add, {lhs, term()});
            } else if (std::size_t m = minus_len()) {
                pos_ += m;
                lhs = make(NodeKind::Sub, {lhs, term()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == '*') {
                ++pos_;
                lhs = make(NodeKind::Mul, {lhs, factor()});
            } else if (pos_ < s_.size() && s_[pos_] == '/') {
                ++pos_;
                lhs = make(NodeKind::Div, {lhs, factor()});
            } else {
                return lhs;
            }
        }
    }

    NodePtr factor() {
        DepthGuard g(*this);
        skip_ws();
        if (std::size_t m = minus_len()) {
            pos_ += m;
            return make(NodeKind::Neg, {factor()});
        }
        NodePtr base = atom();
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '^') {
            std::size_t caret = pos_++;
            skip_ws();
            if (pos_ >= s_.size() || !(std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
                throw ParseError(pos_, "exponent must be a nonnegative number", {"number"});
            double p = number();
            if (p != std::floor(p) && base->kind != NodeKind::Abs)
                throw ParseError(caret, "fractional power needs an abs(...) base");
            return make(NodeKind::Pow, {base}, p);
        }
        return base;
    }

    double number() {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_, ++n;
            return n;
        };
        std::size_t nd = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            nd += digits();
        }
        if (nd == 0) throw ParseError(start, "malformed number", {"number"});
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;  // e.g. "2E[...]" is not an exponent
        }
        double v = 0.0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_ || !std::isfinite(v))
            throw ParseError(start, "number out of range", {"number"});
        return v;
    }

    NodePtr function(NodeKind k) {
        expect('(');
        NodePtr inner = expr();
        expect(')');
        return make(k, {inner});
    }

    NodePtr variable(const std::string& id, std::size_t at) {
        auto allow = [&](bool ok) {
            if (!ok) throw ParseError(at, "identifier '" + id + "' is not available in this context");
        };
        if (id == "t") return make(NodeKind::Variable, {}, 0.0, Var::T);
        if (id == "y") {
            allow(ctx_ != ExprContext::Terminal);
            if (in_expect_) throw ScopeError("'y' cannot appear inside E[...] (offset " + std::to_string(at) + ")");
            return make(NodeKind::Variable, {}, 0.0, Var::Y);
        }
        if (id == "z") {
            allow(ctx_ == ExprContext::Generator);
            if (in_expect_) throw ScopeError("'z' cannot appear inside E[...] (offset " + std::to_string(at) + ")");
            return make(NodeKind::Variable, {}, 0.0, Var::Z);
        }
        if (id == "ydelta" || id == "zzeta") {
            allow(ctx_ == ExprContext::Generator);
            if (!in_expect_)
                throw ScopeError("'" + id + "' may only appear inside E[...] (offset " + std::to_string(at) + ")");
            return make(NodeKind::Variable, {}, 0.0, id == "ydelta" ? Var::YDelta : Var::ZZeta);
        }
        if (ctx_ == ExprContext::Terminal) {
            if (id == "w") return make(NodeKind::Variable, {}, 0.0, Var::W0);
            if (id.size() == 2 && id[0] == 'w' && id[1] >= '1' && id[1] <= '9')
                return make(NodeKind::Variable, {}, 0.0, static_cast<Var>(static_cast<int>(Var::W0) + (id[1] - '1')));
        }
        throw ParseError(at, "unknown identifier '" + id + "'", {"t", "y", "z", "ydelta", "zzeta", "w"});
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= s_.size())
            throw ParseError(pos_, "unexpected end of input", {"number", "identifier", "(", "-"});
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return make(NodeKind::Constant, {}, number());
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t at = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id(s_.substr(at, pos_ - at));
            if (id == "E") {
                if (ctx_ != ExprContext::Generator) throw ParseError(at, "E[...] is only allowed in generators");
                if (in_expect_) throw ScopeError("nested E[...] at offset " + std::to_string(at));
                expect('[');
                in_expect_ = true;
                NodePtr inner = expr();
                in_expect_ = false;
                expect(']');
                return make(NodeKind::Expect, {inner});
            }
            if (id == "abs") return function(NodeKind::Abs);
            if (id == "sin") return function(NodeKind::Sin);
            if (id == "cos") return function(NodeKind::Cos);
            if (id == "exp") return function(NodeKind::Exp);
            if (id == "neg") return function(NodeKind::Neg);
            return variable(id, at);
        }
        throw ParseError(pos_, "unexpected character '" + std::string(1, c) + "'",
                         {"number", "identifier", "(", "-"});
    }
};

std::string fmt_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

const char* var_name(Var v) {
    static const char* names[] = {"t", "y", "z", "ydelta", "zzeta", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"};
    return names[static_cast<int>(v)];
}

inline double apply_pow(double x, double p) {
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    return std::pow(x, p);
}

inline double checked_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
}

}  // namespace

Ast parse_expression(std::string_view src, ExprContext context) {
    Parser p(src, context);
    return Ast{p.run(), context};
}

std::string to_string(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return fmt_number(n->value);
        case NodeKind::Variable: return var_name(n->var);
        case NodeKind::Neg: return "(-" + to_string(n->kids[0]) + ")";
        case NodeKind::Abs: return "abs(" + to_string(n->kids[0]) + ")";
        case NodeKind::Sin: return "sin(" + to_string(n->kids[0]) + ")";
        case NodeKind::Cos: return "cos(" + to_string(n->kids[0]) + ")";
        case NodeKind::Exp: return "exp(" + to_string(n->kids[0]) + ")";
        case NodeKind::Add: return "(" + to_string(n->kids[0]) + " + " + to_string(n->kids[1]) + ")";
        case NodeKind::Sub: return "(" + to_string(n->kids[0]) + " - " + to_string(n->kids[1]) + ")";
        case NodeKind::Mul: return "(" + to_string(n->kids[0]) + " * " + to_string(n->kids[1]) + ")";
        case NodeKind::Div: return "(" + to_string(n->kids[0]) + " / " + to_string(n->kids[1]) + ")";
        case NodeKind::Pow: return "(" + to_string(n->kids[0]) + "^" + fmt_number(n->value) + ")";
        case NodeKind::Expect: return "E[" + to_string(n->kids[0]) + "]";
    }
    return {};
}

bool structurally_equal(const NodePtr& a, const NodePtr& b) {
    if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
    if (a->kind == NodeKind::Constant || a->kind == NodeKind::Pow) {
        if (a->value != b->value) return false;
    }
    if (a->kind == NodeKind::Variable && a->var != b->var) return false;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!structurally_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

std::vector<NodePtr> expectation_nodes(const Ast& ast) {
    std::vector<NodePtr> out;
    std::unordered_set<std::string> seen;
    std::function<void(const NodePtr&)> walk = [&](const NodePtr& n) {
        if (n->kind == NodeKind::Expect) {
            if (seen.insert(expectation_key(n)).second) out.push_back(n);
            return;
        }
        for (const auto& k : n->kids) walk(k);
    };
    walk(ast.root);
    return out;
}

std::size_t count_summands(const Ast& ast) {
    std::function<std::size_t(const NodePtr&)> c = [&](const NodePtr& n) -> std::size_t {
        if (n->kind == NodeKind::Add || n->kind == NodeKind::Sub) return c(n->kids[0]) + c(n->kids[1]);
        return 1;
    };
    return c(ast.root);
}

double eval_node(const NodePtr& n, const EvalContext& ctx) {
    switch (n->kind) {
        case NodeKind::Constant: return n->value;
        case NodeKind::Variable:
            switch (n->var) {
                case Var::T: return ctx.t;
                case Var::Y: return ctx.y;
                case Var::Z: return ctx.z;
                case Var::YDelta: return ctx.ydelta;
                case Var::ZZeta: return ctx.zzeta;
                default: return ctx.w[static_cast<int>(n->var) - static_cast<int>(Var::W0)];
            }
        case NodeKind::Neg: return -eval_node(n->kids[0], ctx);
        case NodeKind::Abs: return std::fabs(eval_node(n->kids[0], ctx));
        case NodeKind::Sin: return std::sin(eval_node(n->kids[0], ctx));
        case NodeKind::Cos: return std::cos(eval_node(n->kids[0], ctx));
        case NodeKind::Exp: return std::exp(eval_node(n->kids[0], ctx));
        case NodeKind::Add: return eval_node(n->kids[0], ctx) + eval_node(n->kids[1], ctx);
        case NodeKind::Sub: return eval_node(n->kids[0], ctx) - eval_node(n->kids[1], ctx);
        case NodeKind::Mul: return eval_node(n->kids[0], ctx) * eval_node(n->kids[1], ctx);
        case NodeKind::Div: {
            double a = eval_node(n->kids[0], ctx);
            return checked_div(a, eval_node(n->kids[1], ctx));
        }
        case NodeKind::Pow: return apply_pow(eval_node(n->kids[0], ctx), n->value);
        case NodeKind::Expect: {
            if (ctx.expectations == nullptr) throw MissingExpectation("no expectation table for " + to_string(n));
            auto it = ctx.expectations->find(expectation_key(n));
            if (it == ctx.expectations->end()) throw MissingExpectation("no value supplied for " + to_string(n));
            return it->second;
        }
    }
    return 0.0;
}

double eval_generator(const Ast& ast, const EvalContext& ctx) { return eval_node(ast.root, ctx); }

// ---------------------------------------------------------------------------

CompiledExpr CompiledExpr::compile(const NodePtr& root,
                                   const std::unordered_map<std::string, std::size_t>& expectation_index) {
    CompiledExpr c;
    c.emit(root, expectation_index, 1);
    if (c.max_depth_ > kMaxDepth) throw InvalidArgument("expression too deep to compile");
    return c;
}

void CompiledExpr::emit(const NodePtr& n, const std::unordered_map<std::string, std::size_t>& eidx, int depth) {
    max_depth_ = std::max(max_depth_, depth);
    auto unary = [&](Op op) {
        emit(n->kids[0], eidx, depth);
        code_.push_back({op});
    };
    auto binary = [&](Op op) {
        emit(n->kids[0], eidx, depth);
        emit(n->kids[1], eidx, depth + 1);
        code_.push_back({op});
    };
    switch (n->kind) {
        case NodeKind::Constant: code_.push_back({Op::Const, 0, n->value}); break;
        case NodeKind::Variable: code_.push_back({Op::Load, static_cast<std::uint32_t>(n->var)}); break;
        case NodeKind::Neg: unary(Op::Neg); break;
        case NodeKind::Abs: unary(Op::Abs); break;
        case NodeKind::Sin: unary(Op::Sin); break;
        case NodeKind::Cos: unary(Op::Cos); break;
        case NodeKind::Exp: unary(Op::Exp); break;
        case NodeKind::Add: binary(Op::Add); break;
        case NodeKind::Sub: binary(Op::Sub); break;
        case NodeKind::Mul: binary(Op::Mul); break;
        case NodeKind::Div: binary(Op::Div); break;
        case NodeKind::Pow:
            emit(n->kids[0], eidx, depth);
            if (n->value == 2.0) code_.push_back({Op::Square});
            else if (n->value != 1.0) code_.push_back({Op::Pow, 0, n->value});
            break;
        case NodeKind::Expect: {
            auto it = eidx.find(expectation_key(n));
            if (it == eidx.end()) throw MissingExpectation("no slot for " + to_string(n));
            code_.push_back({Op::LoadE, static_cast<std::uint32_t>(it->second)});
            break;
        }
    }
}

double CompiledExpr::eval(const double* vars, const double* e) const {
    double stack[kMaxDepth + 4];
    int sp = -1;
    for (const Ins& in : code_) {
        switch (in.op) {
            case Op::Const: stack[++sp] = in.value; break;
            case Op::Load: stack[++sp] = vars[in.idx]; break;
            case Op::LoadE:
                if (e == nullptr) throw MissingExpectation("expectation values not supplied");
                stack[++sp] = e[in.idx];
                break;
            case Op::Neg: stack[sp] = -stack[sp]; break;
            case Op::Abs: stack[sp] = std::fabs(stack[sp]); break;
            case Op::Sin: stack[sp] = std::sin(stack[sp]); break;
            case Op::Cos: stack[sp] = std::cos(stack[sp]); break;
            case Op::Exp: stack[sp] = std::exp(stack[sp]); break;
            case Op::Add: --sp; stack[sp] = stack[sp] + stack[sp + 1]; break;
            case Op::Sub: --sp; stack[sp] = stack[sp] - stack[sp + 1]; break;
            case Op::Mul: --sp; stack[sp] = stack[sp] * stack[sp + 1]; break;
            case Op::Div: --sp; stack[sp] = checked_div(stack[sp], stack[sp + 1]); break;
            case Op::Square: stack[sp] = stack[sp] * stack[sp]; break;
            case Op::Pow: stack[sp] = std::pow(stack[sp], in.value); break;
        }
    }
    return sp >= 0 ? stack[0] : 0.0;
}

// ---------------------------------------------------------------------------
// Growth classification: per-variable polynomial degree bounds over (y, z, ydelta, zzeta).

namespace {

struct Info {
    std::array<double, 4> deg{};
    std::array<bool, 4> dep{};
    bool unclassified = false;
    bool has_vars = false;  // any Variable node at all (including t)

    bool bounded() const { return !unclassified && std::all_of(deg.begin(), deg.end(), [](double d) { return d == 0.0; }); }
    int unbounded_count() const {
        return static_cast<int>(std::count_if(deg.begin(), deg.end(), [](double d) { return d > 0.0; }));
    }
};

Info fail(Info i) {
    i.unclassified = true;
    return i;
}

Info merge_dep(const Info& a, const Info& b) {
    Info r;
    for (int v = 0; v < 4; ++v) r.dep[v] = a.dep[v] || b.dep[v];
    r.has_vars = a.has_vars || b.has_vars;
    r.unclassified = a.unclassified || b.unclassified;
    return r;
}

Info classify(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return {};
        case NodeKind::Variable: {
            Info r;
            r.has_vars = true;
            int slot = -1;
            switch (n->var) {
                case Var::Y: slot = 0; break;
                case Var::Z: slot = 1; break;
                case Var::YDelta: slot = 2; break;
                case Var::ZZeta: slot = 3; break;
                default: break;  // t and w are bounded on the horizon / not generator args
            }
            if (slot >= 0) {
                r.deg[slot] = 1.0;
                r.dep[slot] = true;
            }
            return r;
        }
        case NodeKind::Neg:
        case NodeKind::Abs:
        case NodeKind::Expect: return classify(n->kids[0]);
        case NodeKind::Sin:
        case NodeKind::Cos: {
            Info c = classify(n->kids[0]);
            Info r;
            r.dep = c.dep;
            r.has_vars = c.has_vars;
            return r;
        }
        case NodeKind::Exp: {
            Info c = classify(n->kids[0]);
            if (!c.bounded()) return fail(c);
            return c;
        }
        case NodeKind::Add:
        case NodeKind::Sub: {
            Info a = classify(n->kids[0]), b = classify(n->kids[1]);
            Info r = merge_dep(a, b);
            for (int v = 0; v < 4; ++v) r.deg[v] = std::max(a.deg[v], b.deg[v]);
            return r;
        }
        case NodeKind::Mul: {
            Info a = classify(n->kids[0]), b = classify(n->kids[1]);
            Info r = merge_dep(a, b);
            if (r.unclassified) return r;
            if (a.bounded()) {
                r.deg = b.deg;
                return r;
            }
            if (b.bounded()) {
                r.deg = a.deg;
                return r;
            }
            if (a.unbounded_count() == 1 && b.unbounded_count() == 1) {
                for (int v = 0; v < 4; ++v) {
                    if (a.deg[v] > 0 && b.deg[v] > 0) {
                        r.deg[v] = a.deg[v] + b.deg[v];
                        return r;
                    }
                }
            }
            return fail(r);
        }
        case NodeKind::Div: {
            Info a = classify(n->kids[0]), b = classify(n->kids[1]);
            Info r = merge_dep(a, b);
            if (b.has_vars || b.unclassified) return fail(r);
            double den = 0.0;
            try {
                den = eval_node(n->kids[1], EvalContext{});
            } catch (const Error&) {
                return fail(r);
            }
            if (den == 0.0 || !std::isfinite(den)) return fail(r);
            r.deg = a.deg;
            return r;
        }
        case NodeKind::Pow: {
            Info c = classify(n->kids[0]);
            if (c.unclassified) return c;
            if (c.unbounded_count() > 1 && n->value != 1.0) return fail(c);
            for (auto& d : c.deg) d *= n->value;
            return c;
        }
    }
    return {};
}

}  // namespace

GrowthReport analyze_growth(const Ast& ast) {
    Info info = classify(ast.root);
    GrowthReport r;
    r.z_free = !info.dep[1];
    if (info.unclassified) {
        r.suggested_strategy = Strategy::Manual;
        return r;
    }
    const double dy = info.deg[0], dz = info.deg[1], dyd = info.deg[2], dzz = info.deg[3];
    r.z_growth = dz == 0 ? ZGrowth::Constant : dz <= 1 ? ZGrowth::Linear : dz <= 2 ? ZGrowth::Quadratic : ZGrowth::Unclassified;
    r.y_growth = dy == 0 ? YGrowth::Bounded : dy <= 1 ? YGrowth::Linear : dy <= 2 ? YGrowth::Quadratic : YGrowth::Unclassified;
    if (dyd == 0 && dzz == 0) r.anticipated_growth = AnticipatedGrowth::Bounded;
    else if (dyd <= 1 && dzz <= 1) r.anticipated_growth = AnticipatedGrowth::Linear;
    else if (dyd <= 1 && dzz < 2) {
        r.anticipated_growth = AnticipatedGrowth::Power;
        r.anticipated_power = dzz;
    } else if (dyd <= 2 && dzz <= 2) r.anticipated_growth = AnticipatedGrowth::Quadratic;
    else r.anticipated_growth = AnticipatedGrowth::Unclassified;
    r.bounded = info.bounded();
    r.anticipated_z_bounded = dzz == 0;
    r.suggested_strategy = suggest_strategy(r, false);
    return r;
}

Strategy suggest_strategy(const GrowthReport& r, bool has_lambda) {
    if (r.z_growth == ZGrowth::Unclassified || r.y_growth == YGrowth::Unclassified ||
        r.anticipated_growth == AnticipatedGrowth::Unclassified)
        return Strategy::Manual;
    if (has_lambda) return (r.z_free && r.bounded) ? Strategy::Transform : Strategy::Manual;
    if (r.y_growth == YGrowth::Quadratic || r.anticipated_growth == AnticipatedGrowth::Quadratic)
        return Strategy::PicardSmall;
    if (r.z_growth == ZGrowth::Quadratic)
        return r.anticipated_z_bounded ? Strategy::GlobalStitch : Strategy::LocalContraction;
    if (r.anticipated_growth == AnticipatedGrowth::Power) return Strategy::Manual;
    return Strategy::Lipschitz;
}

std::string to_string(ZGrowth g) {
    switch (g) {
        case ZGrowth::Constant: return "constant";
        case ZGrowth::Linear: return "linear";
        case ZGrowth::Quadratic: return "quadratic";
        case ZGrowth::Unclassified: break;
    }
    return "unclassified";
}

std::string to_string(YGrowth g) {
    switch (g) {
        case YGrowth::Bounded: return "bounded";
        case YGrowth::Linear: return "linear";
        case YGrowth::Quadratic: return "quadratic";
        case YGrowth::Unclassified: break;
    }
    return "unclassified";
}

std::string to_string(AnticipatedGrowth g) {
    switch (g) {
        case AnticipatedGrowth::Bounded: return "bounded";
        case AnticipatedGrowth::Linear: return "linear";
        case AnticipatedGrowth::Power: return "power";
        case AnticipatedGrowth::Quadratic: return "quadratic";
        case AnticipatedGrowth::Unclassified: break;
    }
    return "unclassified";
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::PicardSmall: return "picard-small";
        case Strategy::LocalContraction: return "local-contraction";
        case Strategy::GlobalStitch: return "global-stitch";
        case Strategy::Transform: return "transform";
        case Strategy::Lipschitz: return "lipschitz";
        case Strategy::Auto: return "auto";
        case Strategy::Manual: break;
    }
    return "manual";
}

Strategy strategy_from_string(const std::string& s) {
    for (Strategy k : {Strategy::PicardSmall, Strategy::LocalContraction, Strategy::GlobalStitch, Strategy::Transform,
                       Strategy::Lipschitz, Strategy::Manual, Strategy::Auto})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown strategy '" + s + "'");
}

}  // namespace absde
