#include "absde/condexp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"
#include "absde/paths.hpp"

namespace absde {

namespace {

constexpr double kMaxCondition = 1e14;

void enumerate_exponents(int dim, int degree, const std::vector<bool>& active, std::vector<int>& out) {
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    // graded order: total degree 0, 1, ..., degree
    for (int total = 0; total <= degree; ++total) {
        std::function<void(int, int)> rec = [&](int k, int left) {
            if (k == dim - 1) {
                if (left > 0 && !active[k]) return;
                cur[k] = left;
                out.insert(out.end(), cur.begin(), cur.end());
                return;
            }
            for (int e = left; e >= 0; --e) {
                if (e > 0 && !active[k]) continue;
                cur[k] = e;
                rec(k + 1, left - e);
            }
        };
        rec(0, total);
    }
}

// Probabilists' Hermite values He_0..He_deg at u.
inline void hermite(double u, int deg, double* he) {
    he[0] = 1.0;
    if (deg >= 1) he[1] = u;
    for (int k = 1; k < deg; ++k) he[k + 1] = u * he[k] - k * he[k - 1];
}

struct Factor {
    std::vector<double> lower;
    double condition = 1.0;
};

// Cholesky of G + ridge*I with a diagonally scaled eigenvalue condition check. Feature 0 is the
// constant in every design and is left unpenalized, so constants regress exactly.
Factor factorize(const std::vector<double>& gram, int p, double ridge) {
    Eigen::MatrixXd G(p, p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) G(a, b) = gram[static_cast<std::size_t>(std::min(a, b)) * p + std::max(a, b)];
    G.diagonal().tail(p - 1).array() += ridge;
    if (!G.allFinite()) throw SingularDesign("regression design contains non-finite values");
    Eigen::VectorXd dg = G.diagonal();
    Factor f;
    if ((dg.array() <= 0.0).any()) {
        f.condition = std::numeric_limits<double>::infinity();
    } else {
        Eigen::VectorXd s = dg.array().rsqrt();
        Eigen::MatrixXd S = s.asDiagonal() * G * s.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
        double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        f.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    }
    if (!(f.condition <= kMaxCondition))
        throw SingularDesign("regression design is numerically singular (condition " + std::to_string(f.condition) + ")");
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw SingularDesign("Cholesky factorization failed");
    Eigen::MatrixXd L = llt.matrixL();
    f.lower.resize(static_cast<std::size_t>(p) * p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) f.lower[static_cast<std::size_t>(a) * p + b] = L(a, b);
    return f;
}

void chol_solve(const std::vector<double>& L, int p, double* x) {
    for (int a = 0; a < p; ++a) {
        double s = x[a];
        for (int b = 0; b < a; ++b) s -= L[static_cast<std::size_t>(a) * p + b] * x[b];
        x[a] = s / L[static_cast<std::size_t>(a) * p + a];
    }
    for (int a = p - 1; a >= 0; --a) {
        double s = x[a];
        for (int b = a + 1; b < p; ++b) s -= L[static_cast<std::size_t>(b) * p + a] * x[b];
        x[a] = s / L[static_cast<std::size_t>(a) * p + a];
    }
}

// Chunked accumulation of upper-triangular Gram and rhs; partials combined in chunk order.
template <class RowFn>
std::vector<double> accumulate_gram(std::size_t n, int p, RowFn row) {
    const std::size_t chunks = chunk_count(n);
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(static_cast<std::size_t>(p) * p, 0.0));
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        std::vector<double> f(static_cast<std::size_t>(p));
        double* g = partial[c].data();
        for (std::size_t i = b; i < e; ++i) {
            row(i, f.data());
            for (int a = 0; a < p; ++a) {
                const double fa = f[a];
                double* ga = g + static_cast<std::size_t>(a) * p;
                for (int q = a; q < p; ++q) ga[q] += fa * f[q];
            }
        }
    });
    std::vector<double> gram(static_cast<std::size_t>(p) * p, 0.0);
    for (const auto& part : partial)
        for (std::size_t q = 0; q < gram.size(); ++q) gram[q] += part[q];
    for (double& v : gram) v /= static_cast<double>(n);
    return gram;
}

template <class RowFn>
std::vector<double> accumulate_rhs(std::size_t n, int p, const double* targets, RowFn row) {
    const std::size_t chunks = chunk_count(n);
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(static_cast<std::size_t>(p), 0.0));
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        std::vector<double> f(static_cast<std::size_t>(p));
        double* r = partial[c].data();
        for (std::size_t i = b; i < e; ++i) {
            row(i, f.data());
            const double t = targets[i];
            for (int a = 0; a < p; ++a) r[a] += f[a] * t;
        }
    });
    std::vector<double> rhs(static_cast<std::size_t>(p), 0.0);
    for (const auto& part : partial)
        for (int a = 0; a < p; ++a) rhs[a] += part[a];
    for (double& v : rhs) v /= static_cast<double>(n);
    return rhs;
}

double chunked_sum(std::size_t n, const std::function<double(std::size_t)>& term) {
    std::vector<double> partial(chunk_count(n), 0.0);
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += term(i);
        partial[c] = s;
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0);
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureMap FeatureMap::build(const double* states, std::size_t n, int dim, const BasisSpec& basis) {
    if (n == 0) throw InvalidArgument("empty regression sample");
    if (dim < 1) throw InvalidArgument("state dimension must be positive");
    FeatureMap fm;
    fm.basis_ = basis;
    fm.dim_ = dim;
    fm.center_.assign(static_cast<std::size_t>(dim), 0.0);
    fm.scale_.assign(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < dim; ++k) {
        double mean = chunked_sum(n, [&](std::size_t i) { return states[i * dim + k]; }) / static_cast<double>(n);
        double var = chunked_sum(n, [&](std::size_t i) {
                         double u = states[i * dim + k] - mean;
                         return u * u;
                     }) / static_cast<double>(n);
        fm.center_[k] = mean;
        fm.scale_[k] = std::sqrt(var);
    }
    std::vector<bool> active(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) active[k] = fm.scale_[k] > 1e-12 * (1.0 + std::fabs(fm.center_[k]));

    if (basis.kind == BasisKind::Polynomial) {
        if (basis.degree < 0 || basis.degree > 12) throw InvalidArgument("polynomial degree must lie in [0, 12]");
        enumerate_exponents(dim, basis.degree, active, fm.exponents_);
        fm.n_features_ = static_cast<int>(fm.exponents_.size() / dim);
        return fm;
    }
    if (dim != 1) throw InvalidArgument("binned basis supports scalar states only");
    if (basis.n_bins < 1) throw InvalidArgument("n_bins must be positive");
    if (basis.n_bins > 1 && static_cast<std::size_t>(basis.n_bins) * 10 > n)
        throw InvalidArgument("n_bins must not exceed n_paths / 10");
    int bins = active[0] ? basis.n_bins : 1;
    std::vector<double> sorted(states, states + n);
    std::sort(sorted.begin(), sorted.end());
    for (int b = 1; b < bins; ++b) fm.edges_.push_back(sorted[static_cast<std::size_t>(b) * n / bins]);
    fm.n_features_ = bins;
    return fm;
}

void FeatureMap::eval(const double* x, double* out) const {
    double he[16 * 9];
    const int deg = basis_.degree;
    for (int k = 0; k < dim_; ++k) {
        double u = scale_[k] > 0.0 ? (x[k] - center_[k]) / scale_[k] : 0.0;
        if (basis_.clip > 0.0) u = std::clamp(u, -basis_.clip, basis_.clip);
        hermite(u, deg, he + 16 * k);
    }
    for (int f = 0; f < n_features_; ++f) {
        double v = 1.0;
        const int* e = exponents_.data() + static_cast<std::size_t>(f) * dim_;
        for (int k = 0; k < dim_; ++k)
            if (e[k]) v *= he[16 * k + e[k]];
        out[f] = v;
    }
}

int FeatureMap::bin(double x) const {
    return static_cast<int>(std::upper_bound(edges_.begin(), edges_.end(), x) - edges_.begin());
}

double CondEstimator::apply(const double* state) const {
    if (features_.basis().kind == BasisKind::Binned) return coef_[static_cast<std::size_t>(features_.bin(state[0]))];
    double f[512];
    std::vector<double> big;
    double* out = f;
    if (features_.size() > 512) {
        big.resize(static_cast<std::size_t>(features_.size()));
        out = big.data();
    }
    features_.eval(state, out);
    double s = 0.0;
    for (int k = 0; k < features_.size(); ++k) s += coef_[k] * out[k];
    return s;
}

std::vector<double> CondEstimator::monomial_coefficients() const {
    if (features_.basis().kind != BasisKind::Polynomial || features_.dim() != 1)
        throw InvalidArgument("monomial form exists for scalar polynomial fits only");
    const int deg = features_.basis().degree;
    // He_k(u) in powers of u
    std::vector<std::vector<double>> he(static_cast<std::size_t>(deg) + 1, std::vector<double>(deg + 1, 0.0));
    he[0][0] = 1.0;
    if (deg >= 1) he[1][1] = 1.0;
    for (int k = 1; k < deg; ++k)
        for (int j = 0; j <= deg; ++j) he[k + 1][j] = (j > 0 ? he[k][j - 1] : 0.0) - k * he[k - 1][j];
    std::vector<double> in_u(static_cast<std::size_t>(deg) + 1, 0.0);
    const auto& ex = features_.exponents();
    for (int f = 0; f < features_.size(); ++f)
        for (int j = 0; j <= deg; ++j) in_u[j] += coef_[f] * he[ex[f]][j];
    // substitute u = (x - c) / s
    const double c = features_.center()[0], s = features_.scale()[0];
    std::vector<double> out(static_cast<std::size_t>(deg) + 1, 0.0);
    if (s == 0.0) {
        out[0] = in_u[0];
        return out;
    }
    for (int j = 0; j <= deg; ++j) {
        double binom = 1.0;
        for (int r = 0; r <= j; ++r) {
            // (x - c)^j = sum_r C(j, r) x^r (-c)^(j - r)
            out[r] += in_u[j] / std::pow(s, j) * binom * std::pow(-c, j - r);
            binom = binom * (j - r) / (r + 1);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

SliceRegression::SliceRegression(const double* states, std::size_t n, int dim, const BasisSpec& basis)
    : n_(n), fm_(FeatureMap::build(states, n, dim, basis)) {
    const int p = fm_.size();
    if (n < static_cast<std::size_t>(p)) throw InvalidArgument("fewer samples than basis functions");
    if (basis.kind == BasisKind::Binned) {
        bin_.resize(n);
        bin_count_.assign(static_cast<std::size_t>(p), 0);
        for (std::size_t i = 0; i < n; ++i) {
            bin_[i] = fm_.bin(states[i]);
            ++bin_count_[static_cast<std::size_t>(bin_[i])];
        }
        std::size_t lo = *std::min_element(bin_count_.begin(), bin_count_.end());
        std::size_t hi = *std::max_element(bin_count_.begin(), bin_count_.end());
        condition_ = lo > 0 ? static_cast<double>(hi) / static_cast<double>(lo) : std::numeric_limits<double>::infinity();
        return;
    }
    x_.resize(n * static_cast<std::size_t>(p));
    parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fm_.eval(states + i * dim, x_.data() + i * p);
    });
    auto gram = accumulate_gram(n, p, [&](std::size_t i, double* f) {
        std::copy_n(x_.data() + i * p, p, f);
    });
    Factor f = factorize(gram, p, basis.ridge);
    chol_ = std::move(f.lower);
    condition_ = f.condition;
}

CondEstimator SliceRegression::fit(const double* targets, double* fitted) const {
    const int p = fm_.size();
    std::vector<double> coef(static_cast<std::size_t>(p), 0.0);
    if (fm_.basis().kind == BasisKind::Binned) {
        std::vector<double> sum(static_cast<std::size_t>(p), 0.0);
        for (std::size_t i = 0; i < n_; ++i) sum[static_cast<std::size_t>(bin_[i])] += targets[i];
        double total = std::accumulate(sum.begin(), sum.end(), 0.0) / static_cast<double>(n_);
        for (int b = 0; b < p; ++b)
            coef[b] = bin_count_[b] ? sum[b] / static_cast<double>(bin_count_[b]) : total;
    } else {
        coef = accumulate_rhs(n_, p, targets, [&](std::size_t i, double* f) { std::copy_n(x_.data() + i * p, p, f); });
        chol_solve(chol_, p, coef.data());
    }
    for (double c : coef)
        if (!std::isfinite(c)) throw SingularDesign("regression produced non-finite coefficients");
    std::vector<double> partial(chunk_count(n_), 0.0);
    parallel_chunks(n_, [&](std::size_t c, std::size_t b, std::size_t e) {
        double ss = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            double v;
            if (fm_.basis().kind == BasisKind::Binned) {
                v = coef[static_cast<std::size_t>(bin_[i])];
            } else {
                const double* x = x_.data() + i * p;
                v = 0.0;
                for (int k = 0; k < p; ++k) v += coef[k] * x[k];
            }
            if (fitted) fitted[i] = v;
            double r = targets[i] - v;
            ss += r * r;
        }
        partial[c] = ss;
    });
    FitDiagnostics diag;
    diag.residual_rms = std::sqrt(std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(n_));
    diag.condition = condition_;
    return CondEstimator(fm_, std::move(coef), diag);
}

CondEstimator fit_conditional(const double* states, const double* targets, std::size_t n, int dim, const BasisSpec& basis) {
    SliceRegression reg(states, n, dim, basis);
    return reg.fit(targets, nullptr);
}

CondEstimator fit_conditional(const std::vector<double>& states, const std::vector<double>& targets, const BasisSpec& basis) {
    if (targets.empty() || states.size() % targets.size() != 0)
        throw InvalidArgument("states and targets have inconsistent lengths");
    return fit_conditional(states.data(), targets.data(), targets.size(), static_cast<int>(states.size() / targets.size()),
                           basis);
}

// ---------------------------------------------------------------------------

JointRegression::JointRegression(const SliceRegression& base, const double* dW, int d, double h)
    : base_(base), dW_(dW), d_(d), h_(h) {
    const int nb = base.features().size();
    const std::size_t n = base.n();
    const double rs = 1.0 / std::sqrt(h);
    const double ridge = base.features().basis().ridge;
    if (base.features().basis().kind == BasisKind::Binned) {
        const int q = 1 + d;
        std::vector<std::vector<double>> grams(static_cast<std::size_t>(nb), std::vector<double>(static_cast<std::size_t>(q) * q, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(nb), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& g = grams[static_cast<std::size_t>(base.bins()[i])];
            ++counts[static_cast<std::size_t>(base.bins()[i])];
            double f[10];
            f[0] = 1.0;
            for (int k = 0; k < d; ++k) f[1 + k] = dW[i * d + k] * rs;
            for (int a = 0; a < q; ++a)
                for (int b = a; b < q; ++b) g[static_cast<std::size_t>(a) * q + b] += f[a] * f[b];
        }
        bin_chol_.resize(static_cast<std::size_t>(nb));
        for (int b = 0; b < nb; ++b) {
            double cnt = std::max<double>(1.0, static_cast<double>(counts[b]));
            for (double& v : grams[b]) v /= cnt;
            Factor f = factorize(grams[b], q, ridge);
            bin_chol_[b] = std::move(f.lower);
            condition_ = std::max(condition_, f.condition);
        }
        p_ = q;
        return;
    }
    p_ = nb * (1 + d);
    const double* X = base.design().data();
    auto gram = accumulate_gram(n, p_, [&](std::size_t i, double* f) {
        const double* x = X + i * nb;
        std::copy_n(x, nb, f);
        for (int k = 0; k < d; ++k) {
            const double w = dW[i * d + k] * rs;
            for (int j = 0; j < nb; ++j) f[nb * (1 + k) + j] = x[j] * w;
        }
    });
    Factor f = factorize(gram, p_, ridge);
    chol_ = std::move(f.lower);
    condition_ = f.condition;
}

JointFit JointRegression::fit(const double* targets, double* mean_fitted, double* z_fitted) const {
    const FeatureMap& fm = base_.features();
    const int nb = fm.size();
    const std::size_t n = base_.n();
    const double rs = 1.0 / std::sqrt(h_);
    std::vector<double> a(static_cast<std::size_t>(nb), 0.0);
    std::vector<std::vector<double>> bz(static_cast<std::size_t>(d_), std::vector<double>(static_cast<std::size_t>(nb), 0.0));

    if (fm.basis().kind == BasisKind::Binned) {
        const int q = p_;
        std::vector<std::vector<double>> rhs(static_cast<std::size_t>(nb), std::vector<double>(static_cast<std::size_t>(q), 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(nb), 0);
        for (std::size_t i = 0; i < n; ++i) {
            int b = base_.bins()[i];
            ++counts[static_cast<std::size_t>(b)];
            auto& r = rhs[static_cast<std::size_t>(b)];
            r[0] += targets[i];
            for (int k = 0; k < d_; ++k) r[1 + k] += targets[i] * dW_[i * d_ + k] * rs;
        }
        for (int b = 0; b < nb; ++b) {
            double cnt = std::max<double>(1.0, static_cast<double>(counts[b]));
            for (double& v : rhs[b]) v /= cnt;
            chol_solve(bin_chol_[b], q, rhs[b].data());
            a[b] = rhs[b][0];
            for (int k = 0; k < d_; ++k) bz[k][b] = rhs[b][1 + k] * rs;
        }
    } else {
        const double* X = base_.design().data();
        auto coef = accumulate_rhs(n, p_, targets, [&](std::size_t i, double* f) {
            const double* x = X + i * nb;
            std::copy_n(x, nb, f);
            for (int k = 0; k < d_; ++k) {
                const double w = dW_[i * d_ + k] * rs;
                for (int j = 0; j < nb; ++j) f[nb * (1 + k) + j] = x[j] * w;
            }
        });
        chol_solve(chol_, p_, coef.data());
        for (int j = 0; j < nb; ++j) a[j] = coef[j];
        for (int k = 0; k < d_; ++k)
            for (int j = 0; j < nb; ++j) bz[k][j] = coef[static_cast<std::size_t>(nb) * (1 + k) + j] * rs;
    }
    for (double c : a)
        if (!std::isfinite(c)) throw SingularDesign("martingale regression produced non-finite coefficients");

    std::vector<double> partial(chunk_count(n), 0.0);
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        double ss = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            double m = 0.0, fit_full = 0.0;
            if (fm.basis().kind == BasisKind::Binned) {
                int bin = base_.bins()[i];
                m = a[static_cast<std::size_t>(bin)];
                fit_full = m;
                for (int k = 0; k < d_; ++k) {
                    double z = bz[k][static_cast<std::size_t>(bin)];
                    if (z_fitted) z_fitted[i * d_ + k] = z;
                    fit_full += z * dW_[i * d_ + k];
                }
            } else {
                const double* x = base_.design().data() + i * nb;
                for (int j = 0; j < nb; ++j) m += a[j] * x[j];
                fit_full = m;
                for (int k = 0; k < d_; ++k) {
                    double z = 0.0;
                    for (int j = 0; j < nb; ++j) z += bz[k][j] * x[j];
                    if (z_fitted) z_fitted[i * d_ + k] = z;
                    fit_full += z * dW_[i * d_ + k];
                }
            }
            if (mean_fitted) mean_fitted[i] = m;
            double r = targets[i] - fit_full;
            ss += r * r;
        }
        partial[c] = ss;
    });
    FitDiagnostics diag;
    diag.residual_rms = std::sqrt(std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(n));
    diag.condition = condition_;
    JointFit out;
    out.mean = CondEstimator(fm, std::move(a), diag);
    for (int k = 0; k < d_; ++k) out.z.emplace_back(fm, std::move(bz[k]), diag);
    return out;
}

// ---------------------------------------------------------------------------

double nested_mc_oracle(const ProblemSpec& problem, const TimeGrid& grid, int i, const std::vector<double>& state,
                        const std::function<double(const double*)>& payoff, std::size_t n_inner, std::uint64_t seed,
                        int target) {
    const int d = problem.d;
    if (static_cast<int>(state.size()) != d) throw InvalidArgument("state dimension must equal d");
    if (target < 0) target = grid.n_T;
    if (target < i || target > grid.n_total) throw InvalidArgument("oracle target slice out of range");
    const double sd = std::sqrt(grid.time(target) - grid.time(i));
    // exact Gaussian transition: one draw per component per sub-path
    const std::size_t chunks = chunk_count(n_inner);
    std::vector<double> partial(chunks, 0.0);
    parallel_chunks(n_inner, [&](std::size_t c, std::size_t b, std::size_t e) {
        std::vector<double> w(static_cast<std::size_t>(d));
        double s = 0.0;
        for (std::size_t p = b; p < e; ++p) {
            const std::uint64_t key = stream_key(seed, p);
            for (int k = 0; k < d; ++k) w[k] = state[k] + sd * normal_quantile(counter_uniform(key, static_cast<std::uint64_t>(k)));
            s += payoff(w.data());
        }
        partial[c] = s;
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(n_inner);
}

}  // namespace absde
