#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace absde {

enum class NodeKind : std::uint8_t {
    Constant, Variable, Neg, Abs, Sin, Cos, Exp, Add, Sub, Mul, Div, Pow, Expect
};

/// Variable slots. W0..W8 are the terminal-context Brownian components (w == w1 == W0).
enum class Var : std::uint8_t { T, Y, Z, YDelta, ZZeta, W0, W1, W2, W3, W4, W5, W6, W7, W8 };
inline constexpr std::size_t kVarSlots = 14;

/// Which identifiers an expression may use.
enum class ExprContext : std::uint8_t {
    Generator,  // t, y, z; ydelta, zzeta only inside E[...]
    Terminal,   // t, w, w1..w9
    Lambda      // t, y
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;  // constant value, or exponent for Pow
    Var var = Var::T;
    std::vector<NodePtr> kids;
};

struct Ast {
    NodePtr root;
    ExprContext context = ExprContext::Generator;
};

Ast parse_expression(std::string_view src, ExprContext context);
inline Ast parse_generator(std::string_view src) { return parse_expression(src, ExprContext::Generator); }

/// Canonical text form; reparses to a structurally identical tree.
std::string to_string(const NodePtr& node);
inline std::string to_string(const Ast& ast) { return to_string(ast.root); }

bool structurally_equal(const NodePtr& a, const NodePtr& b);

/// Distinct E[...] nodes in first-appearance order, deduplicated by the canonical text of the inner expression.
std::vector<NodePtr> expectation_nodes(const Ast& ast);
inline std::string expectation_key(const NodePtr& expect_node) { return to_string(expect_node->kids.at(0)); }

/// Top-level summands of a +/- chain (used for reporting).
std::size_t count_summands(const Ast& ast);

struct EvalContext {
    double t = 0.0, y = 0.0, z = 0.0, ydelta = 0.0, zzeta = 0.0;
    std::array<double, 9> w{};
    /// Values for E[...] nodes keyed by expectation_key.
    const std::unordered_map<std::string, double>* expectations = nullptr;
};

/// Tree-walking evaluator. Throws MissingExpectation, DomainError.
double eval_generator(const Ast& ast, const EvalContext& ctx);
double eval_node(const NodePtr& node, const EvalContext& ctx);

/// Flat postfix program for the hot loops. Agrees bit-for-bit with eval_node.
class CompiledExpr {
public:
    CompiledExpr() = default;
    /// expectation_index maps E-node keys to slots in the `expectations` argument of eval.
    static CompiledExpr compile(const NodePtr& root,
                                const std::unordered_map<std::string, std::size_t>& expectation_index = {});

    double eval(const double* vars, const double* expectations = nullptr) const;
    bool empty() const noexcept { return code_.empty(); }

private:
    enum class Op : std::uint8_t {
        Const, Load, LoadE, Neg, Abs, Sin, Cos, Exp, Add, Sub, Mul, Div, Square, Pow
    };
    struct Ins {
        Op op;
        std::uint32_t idx = 0;
        double value = 0.0;
    };
    void emit(const NodePtr& n, const std::unordered_map<std::string, std::size_t>& eidx, int depth);
    std::vector<Ins> code_;
    int max_depth_ = 0;
};

// ---------------------------------------------------------------------------
// Growth classification

enum class ZGrowth : std::uint8_t { Constant, Linear, Quadratic, Unclassified };
enum class YGrowth : std::uint8_t { Bounded, Linear, Quadratic, Unclassified };
enum class AnticipatedGrowth : std::uint8_t { Bounded, Linear, Power, Quadratic, Unclassified };
enum class Strategy : std::uint8_t {
    PicardSmall, LocalContraction, GlobalStitch, Transform, Lipschitz, Manual, Auto
};

struct GrowthReport {
    ZGrowth z_growth = ZGrowth::Unclassified;
    YGrowth y_growth = YGrowth::Unclassified;
    AnticipatedGrowth anticipated_growth = AnticipatedGrowth::Unclassified;
    /// Exponent on the anticipated Z argument when anticipated_growth == Power (1 + alpha).
    double anticipated_power = 0.0;
    bool bounded = false;         // whole expression bounded
    bool z_free = false;          // no dependence on z at all
    bool anticipated_z_bounded = false;
    Strategy suggested_strategy = Strategy::Manual;
};

GrowthReport analyze_growth(const Ast& ast);

/// Strategy once the optional lambda(t,y) z^2 term is known.
Strategy suggest_strategy(const GrowthReport& report, bool has_lambda);

std::string to_string(ZGrowth g);
std::string to_string(YGrowth g);
std::string to_string(AnticipatedGrowth g);
std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

}  // namespace absde
