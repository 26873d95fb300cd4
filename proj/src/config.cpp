#include "absde/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "absde/errors.hpp"

namespace absde {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("'" + join(where, key) + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("'" + join(where, key) + "' must be finite");
    return x;
}

long long get_int(const json& obj, const std::string& where, const char* key, long long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + join(where, key) + "' must be an integer");
    return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + join(where, key) + "' must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("'" + join(where, key) + "' must be a string");
    return v.get<std::string>();
}

Params get_params(const json& spec, const std::string& where, std::initializer_list<const char*> allowed) {
    Params p;
    if (!spec.contains("params")) return p;
    const std::string w = where + ".params";
    only_keys(spec.at("params"), w, allowed);
    for (auto it = spec.at("params").begin(); it != spec.at("params").end(); ++it) {
        if (!it->is_number()) throw ConfigError("'" + w + "." + it.key() + "' must be a number");
        p[it.key()] = it->get<double>();
    }
    return p;
}

template <class Fn>
auto with_parse(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ConfigError("'" + where + "': " + e.what());
    } catch (const ScopeError& e) {
        throw ConfigError("'" + where + "': " + e.what());
    }
}

GeneratorPtr read_generator(const json& v, int m, int d, std::string& builtin) {
    const std::string where = "problem.generator";
    if (v.is_string()) {
        const auto names = builtin_generator_names();
        if (std::find(names.begin(), names.end(), v.get<std::string>()) != names.end())
            throw ConfigError("'" + where + "' strings are expressions; write {\"builtin\": \"" + v.get<std::string>() + "\"}");
        if (m != 1 || d != 1) throw ConfigError("'" + where + "' expressions are scalar; use a builtin for m, d > 1");
        return with_parse(where, [&] { return ExprGenerator::from_source(v.get<std::string>()); });
    }
    only_keys(v, where, {"builtin", "expr", "params"});
    if (v.contains("builtin") == v.contains("expr")) throw ConfigError("'" + where + "' needs exactly one of builtin, expr");
    if (v.contains("expr")) {
        if (v.contains("params")) throw ConfigError("'" + where + ".params' only applies to builtins");
        const std::string src = get_string(v, where, "expr", "");
        if (m != 1 || d != 1) throw ConfigError("'" + where + "' expressions are scalar; use a builtin for m, d > 1");
        return with_parse(where + ".expr", [&] { return ExprGenerator::from_source(src); });
    }
    builtin = get_string(v, where, "builtin", "");
    const auto names = builtin_generator_names();
    if (std::find(names.begin(), names.end(), builtin) == names.end())
        throw ConfigError("unknown builtin generator '" + builtin + "' in '" + where + ".builtin'");
    Params p;
    if (builtin == "constant")
        p = get_params(v, where, {"c"});
    else if (builtin == "example_4_3")
        p = get_params(v, where, {"alpha"});
    else
        p = get_params(v, where, {});
    return make_builtin_generator(builtin, p, m, d);
}

LambdaPtr read_lambda(const json& v) {
    const std::string where = "problem.lambda";
    if (v.is_null()) return nullptr;
    if (v.is_number()) return std::make_shared<ConstantLambda>(v.get<double>());
    if (v.is_string()) {
        const std::string src = v.get<std::string>();
        if (src == "zero" || src == "constant" || src == "example_5_5")
            throw ConfigError("'" + where + "' strings are expressions; write {\"builtin\": \"" + src + "\"}");
        return with_parse(where, [&] { return std::make_shared<ExprLambda>(parse_expression(src, ExprContext::Lambda)); });
    }
    only_keys(v, where, {"builtin", "expr", "params"});
    if (v.contains("builtin") == v.contains("expr")) throw ConfigError("'" + where + "' needs exactly one of builtin, expr");
    if (v.contains("expr")) {
        const std::string src = get_string(v, where, "expr", "");
        return with_parse(where + ".expr",
                          [&] { return std::make_shared<ExprLambda>(parse_expression(src, ExprContext::Lambda)); });
    }
    const std::string name = get_string(v, where, "builtin", "");
    if (name != "zero" && name != "constant" && name != "example_5_5")
        throw ConfigError("unknown builtin lambda '" + name + "' in '" + where + ".builtin'");
    return make_builtin_lambda(name, get_params(v, where, name == "constant" ? std::initializer_list<const char*>{"c"}
                                                                             : std::initializer_list<const char*>{}));
}

TerminalPtr read_terminal(const json& obj, const char* key, int size, const char* fallback) {
    const std::string where = std::string("problem.") + key;
    if (!obj.contains(key)) return ExprTerminal::from_source(fallback, size);
    const json& v = obj.at(key);
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << std::fabs(v.get<double>());
        return ExprTerminal::from_source((v.get<double>() < 0 ? "-" : "") + os.str(), size);
    }
    if (v.is_string()) return with_parse(where, [&] { return ExprTerminal::from_source(v.get<std::string>(), size); });
    if (v.is_array()) {
        if (static_cast<int>(v.size()) != size)
            throw ConfigError("'" + where + "' needs " + std::to_string(size) + " expressions");
        std::vector<Ast> exprs;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError("'" + where + "' entries must be strings");
            exprs.push_back(with_parse(where, [&] { return parse_expression(e.get<std::string>(), ExprContext::Terminal); }));
        }
        return std::make_shared<ExprTerminal>(std::move(exprs), size);
    }
    throw ConfigError("'" + where + "' must be a number, a string or an array of strings");
}

DelaySpec read_delay(const json& obj, const char* key, const DelaySpec& fallback) {
    const std::string where = std::string("problem.") + key;
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number()) return DelaySpec::constant(v.get<double>());
    only_keys(v, where, {"kind", "a", "b", "values", "L"});
    const std::string kind = get_string(v, where, "kind", "constant");
    if (kind == "constant") return DelaySpec::constant(get_number(v, where, "a", 0.0));
    if (kind == "affine") return DelaySpec::affine(get_number(v, where, "a", 0.0), get_number(v, where, "b", 0.0));
    if (kind == "tabulated") {
        if (!v.contains("values") || !v.at("values").is_array()) throw ConfigError("'" + where + ".values' must be an array");
        std::vector<double> vals;
        for (const auto& x : v.at("values")) {
            if (!x.is_number()) throw ConfigError("'" + where + ".values' entries must be numbers");
            vals.push_back(x.get<double>());
        }
        return DelaySpec::tabulated(std::move(vals), get_number(v, where, "L", 1.0));
    }
    throw ConfigError("unknown delay kind '" + kind + "' in '" + where + ".kind'");
}

std::optional<double> closed_form(const RunConfig& c, const std::string& builtin) {
    const ProblemSpec& p = c.problem;
    if (p.m != 1 || p.d != 1 || p.has_lambda()) return std::nullopt;
    const auto xi = p.terminal_xi->constant_value();
    if (!xi) {
        // f = 0 with xi = g(W) centred: only the plain martingale W is covered
        if (builtin == "zero") {
            const auto* et = dynamic_cast<const ExprTerminal*>(p.terminal_xi.get());
            if (et && et->expressions().size() == 1) {
                const NodePtr& r = et->expressions()[0].root;
                if (r->kind == NodeKind::Variable && r->var == Var::W0) return 0.0;
            }
        }
        return std::nullopt;
    }
    if (builtin == "zero") return *xi;
    if (builtin == "quadratic_z") return *xi + p.T;
    if (builtin == "anticipated_mean" && p.delta_shift.kind == DelayKind::Constant && p.delta_shift.a >= p.T)
        return *xi * (1.0 + p.T);
    return std::nullopt;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    only_keys(doc, "config", {"problem", "numerics", "strategy", "outer", "outputs", "study"});
    RunConfig c;
    if (!doc.contains("problem")) throw ConfigError("missing key 'problem'");
    const json& pj = doc.at("problem");
    only_keys(pj, "problem", {"T", "K", "m", "d", "generator", "lambda", "xi", "eta", "delta", "zeta", "constants"});
    ProblemSpec& p = c.problem;
    p.T = get_number(pj, "problem", "T", 1.0);
    p.K = get_number(pj, "problem", "K", 0.0);
    p.m = static_cast<int>(get_int(pj, "problem", "m", 1));
    p.d = static_cast<int>(get_int(pj, "problem", "d", 1));
    if (p.m < 1 || p.d < 1 || p.m > 9 || p.d > 9) throw ConfigError("'problem.m' and 'problem.d' must lie in [1, 9]");
    if (!pj.contains("generator")) throw ConfigError("missing key 'problem.generator'");
    std::string builtin;
    p.generator = read_generator(pj.at("generator"), p.m, p.d, builtin);
    if (pj.contains("lambda")) p.lambda_term = read_lambda(pj.at("lambda"));
    p.terminal_xi = read_terminal(pj, "xi", p.m, "0");
    p.terminal_eta = read_terminal(pj, "eta", p.m * p.d, "0");
    p.delta_shift = read_delay(pj, "delta", DelaySpec::constant(0.0));
    p.zeta_shift = read_delay(pj, "zeta", p.delta_shift);
    if (pj.contains("constants")) {
        const json& cj = pj.at("constants");
        only_keys(cj, "problem.constants", {"C", "gamma", "alpha_holder", "L"});
        p.constants.C = get_number(cj, "problem.constants", "C", 1.0);
        p.constants.gamma = get_number(cj, "problem.constants", "gamma", 1.0);
        p.constants.alpha_holder = get_number(cj, "problem.constants", "alpha_holder", 0.0);
        p.constants.L = get_number(cj, "problem.constants", "L", 0.0);
    }
    try {
        p.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("problem: ") + e.what());
    }

    if (doc.contains("numerics")) {
        const json& nj = doc.at("numerics");
        const std::string w = "numerics";
        only_keys(nj, w, {"n_T", "n_paths", "basis", "seed", "scheme", "inner_tol", "inner_max_iter", "antithetic"});
        NumericsSpec& n = c.numerics;
        n.n_T = static_cast<int>(get_int(nj, w, "n_T", n.n_T));
        const long long np = get_int(nj, w, "n_paths", static_cast<long long>(n.n_paths));
        if (np < 2) throw ConfigError("'numerics.n_paths' must be at least 2");
        n.n_paths = static_cast<std::size_t>(np);
        const long long seed = get_int(nj, w, "seed", static_cast<long long>(n.seed));
        if (seed < 0) throw ConfigError("'numerics.seed' must be nonnegative");
        n.seed = static_cast<std::uint64_t>(seed);
        const std::string scheme = get_string(nj, w, "scheme", "explicit");
        if (scheme == "explicit")
            n.scheme = Scheme::Explicit;
        else if (scheme == "implicit")
            n.scheme = Scheme::Implicit;
        else
            throw ConfigError("unknown scheme '" + scheme + "' in 'numerics.scheme'");
        n.inner_tol = get_number(nj, w, "inner_tol", n.inner_tol);
        n.inner_max_iter = static_cast<int>(get_int(nj, w, "inner_max_iter", n.inner_max_iter));
        n.antithetic = get_bool(nj, w, "antithetic", n.antithetic);
        if (nj.contains("basis")) {
            const json& bj = nj.at("basis");
            only_keys(bj, "numerics.basis", {"kind", "degree", "n_bins", "ridge", "clip"});
            const std::string kind = get_string(bj, "numerics.basis", "kind", "polynomial");
            if (kind == "polynomial")
                n.basis.kind = BasisKind::Polynomial;
            else if (kind == "binned")
                n.basis.kind = BasisKind::Binned;
            else
                throw ConfigError("unknown basis kind '" + kind + "' in 'numerics.basis.kind'");
            n.basis.degree = static_cast<int>(get_int(bj, "numerics.basis", "degree", n.basis.degree));
            n.basis.n_bins = static_cast<int>(get_int(bj, "numerics.basis", "n_bins", n.basis.n_bins));
            n.basis.ridge = get_number(bj, "numerics.basis", "ridge", n.basis.ridge);
            n.basis.clip = get_number(bj, "numerics.basis", "clip", n.basis.clip);
        }
        if (n.n_T < 1) throw ConfigError("'numerics.n_T' must be positive");
        if (!(n.inner_tol > 0.0)) throw ConfigError("'numerics.inner_tol' must be positive");
        if (n.inner_max_iter < 1) throw ConfigError("'numerics.inner_max_iter' must be positive");
        if (n.basis.degree < 0 || n.basis.degree > 12) throw ConfigError("'numerics.basis.degree' must lie in [0, 12]");
        if (n.basis.n_bins < 1) throw ConfigError("'numerics.basis.n_bins' must be positive");
        if (!(n.basis.ridge >= 0.0)) throw ConfigError("'numerics.basis.ridge' must be nonnegative");
        if (!(n.basis.clip >= 0.0)) throw ConfigError("'numerics.basis.clip' must be nonnegative");
        if (n.antithetic && n.n_paths % 2) throw ConfigError("'numerics.n_paths' must be even with antithetic sampling");
    }

    if (doc.contains("strategy")) {
        const json& s = doc.at("strategy");
        if (!s.is_string()) throw ConfigError("'strategy' must be a string");
        c.strategy = strategy_from_string(s.get<std::string>());
        if (c.strategy == Strategy::Manual) throw ConfigError("'strategy' must name a solver or auto");
    }

    if (doc.contains("outer")) {
        const json& oj = doc.at("outer");
        const std::string w = "outer";
        only_keys(oj, w, {"tol", "max_iter", "barrier_slack", "window_steps", "t_lo", "quad_tol"});
        OuterSpec& o = c.outer;
        o.tol = get_number(oj, w, "tol", o.tol);
        o.max_iter = static_cast<int>(get_int(oj, w, "max_iter", o.max_iter));
        o.barrier_slack = get_number(oj, w, "barrier_slack", o.barrier_slack);
        o.window_steps = static_cast<int>(get_int(oj, w, "window_steps", o.window_steps));
        if (oj.contains("t_lo")) o.t_lo = get_number(oj, w, "t_lo", 0.0);
        o.quad_tol = get_number(oj, w, "quad_tol", o.quad_tol);
        if (!(o.tol > 0.0) || o.max_iter < 1 || !(o.barrier_slack >= 0.0) || o.window_steps < 0 || !(o.quad_tol > 0.0))
            throw ConfigError("'outer' has an out-of-range value");
    }

    if (doc.contains("outputs")) {
        const json& oj = doc.at("outputs");
        only_keys(oj, "outputs", {"summary", "slices", "diagnostics", "table"});
        c.outputs.summary = get_string(oj, "outputs", "summary", "");
        c.outputs.slices = get_string(oj, "outputs", "slices", "");
        c.outputs.diagnostics = get_string(oj, "outputs", "diagnostics", "");
        c.outputs.table = get_string(oj, "outputs", "table", "");
    }

    if (doc.contains("study")) {
        const json& sj = doc.at("study");
        only_keys(sj, "study", {"grids", "paths", "reference"});
        StudySpec st;
        auto read_list = [&](const char* key, auto& out) {
            if (!sj.contains(key)) return;
            const json& v = sj.at(key);
            if (!v.is_array() || v.empty()) throw ConfigError(std::string("'study.") + key + "' must be a nonempty array");
            for (const auto& x : v) {
                if (!x.is_number_integer() || x.get<long long>() < 1)
                    throw ConfigError(std::string("'study.") + key + "' entries must be positive integers");
                out.push_back(static_cast<typename std::decay_t<decltype(out)>::value_type>(x.get<long long>()));
            }
        };
        read_list("grids", st.grids);
        read_list("paths", st.paths);
        if (st.grids.empty()) st.grids.push_back(c.numerics.n_T);
        if (st.paths.empty()) st.paths.push_back(c.numerics.n_paths);
        if (sj.contains("reference")) {
            const json& r = sj.at("reference");
            if (r.is_number())
                st.reference = r.get<double>();
            else if (r.is_string() && r.get<std::string>() == "self")
                st.self_reference = true;
            else
                throw ConfigError("'study.reference' must be a number or \"self\"");
        }
        const int finest = *std::max_element(st.grids.begin(), st.grids.end());
        for (int g : st.grids)
            if (finest % g) throw ConfigError("'study.grids' must all divide the finest grid " + std::to_string(finest));
        for (std::size_t n : st.paths)
            if (n < 2) throw ConfigError("'study.paths' entries must be at least 2");
        c.study = st;
    }
    c.closed_form_y0 = closed_form(c, builtin);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

}  // namespace absde
