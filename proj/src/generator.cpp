#include "absde/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "absde/errors.hpp"

namespace absde {

namespace {

bool uses_var(const NodePtr& n, Var v) {
    if (n->kind == NodeKind::Variable) return n->var == v;
    for (const auto& k : n->kids)
        if (uses_var(k, v)) return true;
    return false;
}

double param(const Params& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

}  // namespace

ExprGenerator::ExprGenerator(Ast ast) : ast_(std::move(ast)) {
    if (ast_.context != ExprContext::Generator) throw InvalidArgument("generator expression parsed in the wrong context");
    std::unordered_map<std::string, std::size_t> index;
    for (const NodePtr& e : expectation_nodes(ast_)) {
        std::string key = expectation_key(e);
        index.emplace(key, keys_.size());
        keys_.push_back(key);
        inner_.push_back(CompiledExpr::compile(e->kids[0]));
        uses_.push_back({uses_var(e->kids[0], Var::YDelta), uses_var(e->kids[0], Var::ZZeta), false});
    }
    main_ = CompiledExpr::compile(ast_.root, index);
    growth_ = analyze_growth(ast_);
}

GeneratorPtr ExprGenerator::from_source(const std::string& src) {
    return std::make_shared<ExprGenerator>(parse_generator(src));
}

double ExprGenerator::expectation_integrand(std::size_t k, double t, const Anticipated& a) const {
    double vars[kVarSlots] = {};
    vars[static_cast<int>(Var::T)] = t;
    if (a.ydelta) vars[static_cast<int>(Var::YDelta)] = a.ydelta[0];
    if (a.zzeta) vars[static_cast<int>(Var::ZZeta)] = a.zzeta[0];
    return inner_[k].eval(vars);
}

void ExprGenerator::evaluate(double t, const double* y, const double* z, const double* e, double* out) const {
    double vars[kVarSlots] = {};
    vars[static_cast<int>(Var::T)] = t;
    vars[static_cast<int>(Var::Y)] = y[0];
    vars[static_cast<int>(Var::Z)] = z[0];
    out[0] = main_.eval(vars, e);
}

// ---------------------------------------------------------------------------

double QuadraticSmallDataGenerator::expectation_integrand(std::size_t k, double, const Anticipated& a) const {
    double s = a.ydelta[k] * a.ydelta[k];
    for (int j = 0; j < d_; ++j) {
        double v = a.zzeta[k * d_ + j];
        s += v * v;
    }
    return s;
}

void QuadraticSmallDataGenerator::evaluate(double, const double* y, const double* z, const double* e, double* out) const {
    for (int c = 0; c < m_; ++c) {
        double s = y[c] * y[c];
        for (int j = 0; j < d_; ++j) s += z[c * d_ + j] * z[c * d_ + j];
        out[c] = s + e[c];
    }
}

GrowthReport QuadraticSmallDataGenerator::growth() const {
    GrowthReport r;
    r.z_growth = ZGrowth::Quadratic;
    r.y_growth = YGrowth::Quadratic;
    r.anticipated_growth = AnticipatedGrowth::Quadratic;
    r.suggested_strategy = Strategy::PicardSmall;
    return r;
}

std::string QuadraticSmallDataGenerator::describe() const {
    std::ostringstream os;
    os << "example_3_3(m=" << m_ << ", d=" << d_ << ")";
    return os.str();
}

// ---------------------------------------------------------------------------

double LambdaFunction::dt(double t, double y) const {
    const double e = 1e-5 * std::max(1.0, std::fabs(t));
    return (value(t + e, y) - value(t - e, y)) / (2.0 * e);
}

std::string ConstantLambda::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << c_;
    return os.str();
}

double GaussianRampLambda::value(double t, double y) const { return std::exp(-y * y) * t; }
double GaussianRampLambda::dt(double, double y) const { return std::exp(-y * y); }
double GaussianRampLambda::antiderivative(double t, double y) const { return t * antiderivative_dt(t, y); }
double GaussianRampLambda::antiderivative_dt(double, double y) const { return 0.5 * std::sqrt(M_PI) * std::erf(y); }

ExprLambda::ExprLambda(Ast ast) : ast_(std::move(ast)) {
    if (ast_.context != ExprContext::Lambda) throw InvalidArgument("lambda expression parsed in the wrong context");
    code_ = CompiledExpr::compile(ast_.root);
    zero_ = ast_.root->kind == NodeKind::Constant && ast_.root->value == 0.0;
}

double ExprLambda::value(double t, double y) const {
    double vars[kVarSlots] = {};
    vars[static_cast<int>(Var::T)] = t;
    vars[static_cast<int>(Var::Y)] = y;
    return code_.eval(vars);
}

void LambdaAugmentedGenerator::evaluate(double t, const double* y, const double* z, const double* e, double* out) const {
    base_->evaluate(t, y, z, e, out);
    out[0] += lambda_->value(t, y[0]) * z[0] * z[0];
}

GrowthReport LambdaAugmentedGenerator::growth() const {
    GrowthReport r = base_->growth();
    if (r.z_growth == ZGrowth::Constant || r.z_growth == ZGrowth::Linear || r.z_growth == ZGrowth::Quadratic)
        r.z_growth = ZGrowth::Quadratic;
    r.z_free = false;
    r.bounded = false;
    r.suggested_strategy = suggest_strategy(base_->growth(), true);
    return r;
}

std::string LambdaAugmentedGenerator::describe() const {
    return base_->describe() + " + (" + lambda_->describe() + ")*z^2";
}

// ---------------------------------------------------------------------------

ExprTerminal::ExprTerminal(std::vector<Ast> exprs, int size) : exprs_(std::move(exprs)), size_(size) {
    if (exprs_.empty()) throw InvalidArgument("terminal needs at least one expression");
    if (exprs_.size() != 1 && static_cast<int>(exprs_.size()) != size_)
        throw InvalidArgument("terminal expression count must be 1 or " + std::to_string(size_));
    for (const Ast& a : exprs_) {
        if (a.context != ExprContext::Terminal) throw InvalidArgument("terminal expression parsed in the wrong context");
        code_.push_back(CompiledExpr::compile(a.root));
        for (int k = 0; k < 9; ++k)
            if (uses_var(a.root, static_cast<Var>(static_cast<int>(Var::W0) + k))) n_w_ = std::max(n_w_, k + 1);
    }
    bool all_const = true;
    double c = 0.0;
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
        const NodePtr& r = exprs_[i].root;
        if (r->kind != NodeKind::Constant || (i > 0 && r->value != c)) {
            all_const = false;
            break;
        }
        c = r->value;
    }
    if (all_const) constant_ = c;
}

TerminalPtr ExprTerminal::from_source(const std::string& src, int size) {
    return std::make_shared<ExprTerminal>(std::vector<Ast>{parse_expression(src, ExprContext::Terminal)}, size);
}

void ExprTerminal::evaluate(double t, const double* w, double* out) const {
    double vars[kVarSlots] = {};
    vars[static_cast<int>(Var::T)] = t;
    if (w) {
        for (int k = 0; k < n_w_; ++k) vars[static_cast<int>(Var::W0) + k] = w[k];
    }
    if (code_.size() == 1) {
        double v = code_[0].eval(vars);
        for (int i = 0; i < size_; ++i) out[i] = v;
    } else {
        for (int i = 0; i < size_; ++i) out[i] = code_[i].eval(vars);
    }
}

std::string ExprTerminal::describe() const {
    std::string s;
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
        if (i) s += "; ";
        s += to_string(exprs_[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------

std::vector<std::string> builtin_generator_names() {
    return {"zero", "constant", "anticipated_mean", "example_3_3", "example_4_3", "example_4_7", "example_5_5",
            "quadratic_z"};
}

GeneratorPtr make_builtin_generator(const std::string& name, const Params& params, int m, int d) {
    auto scalar_only = [&] {
        if (m != 1 || d != 1) throw ConfigError("builtin generator '" + name + "' is scalar (m = d = 1)");
    };
    if (name == "example_3_3") return std::make_shared<QuadraticSmallDataGenerator>(m, d);
    scalar_only();
    if (name == "zero") return ExprGenerator::from_source("0");
    if (name == "constant") {
        std::ostringstream os;
        os.precision(17);
        double c = param(params, "c", 1.0);
        os << std::fabs(c);
        return ExprGenerator::from_source((c < 0 ? "-" : "") + os.str());
    }
    if (name == "anticipated_mean") return ExprGenerator::from_source("E[ydelta]");
    if (name == "example_4_3") {
        double alpha = param(params, "alpha", 0.5);
        if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("example_4_3 needs alpha in [0, 1)");
        std::ostringstream os;
        os.precision(17);
        os << "1 + abs(y) + abs(z)^2 + E[abs(ydelta)] + E[abs(zzeta)^" << (1.0 + alpha) << "]";
        return ExprGenerator::from_source(os.str());
    }
    if (name == "example_4_7")
        return ExprGenerator::from_source("1 + abs(z)^2 + 1 + abs(y) + E[abs(ydelta)] + E[abs(sin(zzeta))]");
    if (name == "example_5_5")
        return ExprGenerator::from_source("1 + abs(sin(y)) + E[abs(cos(ydelta))] + E[abs(cos(zzeta))]");
    if (name == "quadratic_z") return ExprGenerator::from_source("1 + z^2");
    throw ConfigError("unknown builtin generator '" + name + "'");
}

LambdaPtr make_builtin_lambda(const std::string& name, const Params& params) {
    if (name == "zero") return std::make_shared<ConstantLambda>(0.0);
    if (name == "constant") return std::make_shared<ConstantLambda>(param(params, "c", 1.0));
    if (name == "example_5_5") return std::make_shared<GaussianRampLambda>();
    throw ConfigError("unknown builtin lambda '" + name + "'");
}

}  // namespace absde
