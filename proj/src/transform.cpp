#include "absde/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "absde/errors.hpp"
#include "absde/parallel.hpp"

namespace absde {

namespace {

using GL7 = boost::math::quadrature::gauss<double, 7>;
using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

// Fixed (non-adaptive) rule on [a, b]; works for a > b.
template <class Rule, class F>
double fixed_rule(F&& f, double a, double b) {
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = w[0] * f(c);
    for (std::size_t i = 1; i < x.size(); ++i) s += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
    return s * r;
}

template <class F>
double adaptive(F&& f, double a, double b, double tol, const char* what) {
    if (a == b) return 0.0;
    double err = 0.0;
    const double sign = a < b ? 1.0 : -1.0;
    const double v = GK15::integrate(f, std::min(a, b), std::max(a, b), 20, tol, &err);
    if (!std::isfinite(v) || err > 100.0 * tol * std::max(1.0, std::fabs(v)))
        throw QuadratureFailure(std::string("adaptive quadrature failed for ") + what);
    return sign * v;
}

inline double hermite(double s, double dx, double f0, double d0, double f1, double d1) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * dx * d0 + (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * dx * d1;
}

inline double hermite_d(double s, double dx, double f0, double d0, double f1, double d1) {
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * f0 + (-6 * s2 + 6 * s) * f1) / dx + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1;
}

}  // namespace

PhiTransform::PhiTransform(LambdaPtr lambda, double quad_tol)
    : lambda_(std::move(lambda)), tol_(quad_tol), identity_(lambda_ == nullptr || lambda_->is_zero()) {
    if (!(quad_tol > 0.0)) throw InvalidArgument("quad_tol must be positive");
    if (!lambda_) lambda_ = std::make_shared<ConstantLambda>(0.0);
}

std::shared_ptr<PhiTransform> build_phi_transform(LambdaPtr lambda, double quad_tol) {
    auto phi = std::make_shared<PhiTransform>(std::move(lambda), quad_tol);
    if (!phi->identity()) {
        // cheap sanity sweep: phi_y must be positive and finite on the table range
        for (double t : {0.0, 0.5, 1.0})
            for (double y = -PhiTransform::kTableRange; y <= PhiTransform::kTableRange; y += 1.0) {
                double py = phi->phi_y(t, y);
                if (!(py > 0.0)) throw NonMonotone("phi_y is not positive at (" + std::to_string(t) + ", " + std::to_string(y) + ")");
            }
    }
    return phi;
}

double PhiTransform::Lambda(double t, double y) const {
    if (identity_) return 0.0;
    if (const double c = lambda_->antiderivative(t, y); !std::isnan(c)) return c;
    return adaptive([&](double r) { return lambda_->value(t, r); }, 0.0, y, 0.1 * tol_, "Lambda");
}

double PhiTransform::Lambda_t(double t, double y) const {
    if (identity_) return 0.0;
    if (const double c = lambda_->antiderivative_dt(t, y); !std::isnan(c)) return c;
    return adaptive([&](double r) { return lambda_->dt(t, r); }, 0.0, y, 0.1 * tol_, "Lambda_t");
}

double PhiTransform::phi_y(double t, double y) const {
    if (identity_) return 1.0;
    const double v = std::exp(2.0 * Lambda(t, y));
    if (!std::isfinite(v)) throw QuadratureFailure("phi_y overflows");
    return v;
}

double PhiTransform::phi(double t, double y) const {
    if (identity_) return y;
    return adaptive([&](double s) { return std::exp(2.0 * Lambda(t, s)); }, 0.0, y, tol_, "phi");
}

double PhiTransform::phi_t(double t, double y) const {
    if (identity_) return 0.0;
    return adaptive([&](double s) { return 2.0 * Lambda_t(t, s) * std::exp(2.0 * Lambda(t, s)); }, 0.0, y, tol_, "phi_t");
}

double PhiTransform::phi_inv(double t, double ybar) const {
    if (identity_) return ybar;
    if (ybar == 0.0) return 0.0;
    const double sgn = ybar > 0 ? 1.0 : -1.0;
    double lo = 0.0, hi = sgn;
    int expand = 0;
    while (sgn * phi(t, hi) < sgn * ybar) {
        lo = hi;
        hi *= 2.0;
        if (++expand > 12) throw DomainError("value " + std::to_string(ybar) + " outside the range of phi at t = " + std::to_string(t));
    }
    if (lo > hi) std::swap(lo, hi);
    double y = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = phi(t, y) - ybar;
        if (f == 0.0) return y;
        if (f > 0) hi = y;
        else lo = y;
        double next = y - f / phi_y(t, y);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - y) <= 1e-15 * (1.0 + std::fabs(y))) return next;
        y = next;
        if (hi - lo <= 1e-15 * (1.0 + std::fabs(y))) return y;
    }
    return y;
}

// ---------------------------------------------------------------------------

void PhiTransform::tabulate(const std::vector<double>& times) {
    tables_.clear();
    if (identity_) return;
    std::vector<double> ts(times);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    const int N = static_cast<int>(2 * kTableRange * kNodesPerUnit) + 1;
    const int c = N / 2;
    const double dx = 1.0 / kNodesPerUnit;
    auto node = [&](int j) { return (j - c) * dx; };
    const std::size_t segs = static_cast<std::size_t>(N - 1);
    // per segment [y_j, y_{j+1}]: increments of Lambda, Lambda_t, and (for the two directions) phi, phi_t
    struct Inc {
        double dL, dLt, dphi_fwd, dphit_fwd, dphi_bwd, dphit_bwd;
    };
    std::vector<Inc> inc(ts.size() * segs);
    parallel_chunks(inc.size(), [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t q = b; q < e; ++q) {
            const double t = ts[q / segs];
            const int j = static_cast<int>(q % segs);
            const double y0 = node(j), y1 = node(j + 1);
            Inc& r = inc[q];
            auto lam = [&](double u) { return lambda_->value(t, u); };
            auto lamt = [&](double u) { return lambda_->dt(t, u); };
            r.dL = fixed_rule<GL7>(lam, y0, y1);
            r.dLt = fixed_rule<GL7>(lamt, y0, y1);
            // anchored at y0 (moving right) and at y1 (moving left); base values added later
            auto seg = [&](double anchor, double to, double& dphi, double& dphit) {
                // integrand relative to the anchor's Lambda, Lambda_t: exp(2 (L_a + l)) = e^{2 L_a} e^{2 l}
                dphi = fixed_rule<GK15>([&](double s) { return std::exp(2.0 * fixed_rule<GL7>(lam, anchor, s)); }, anchor, to);
                dphit = fixed_rule<GK15>(
                    [&](double s) {
                        return 2.0 * fixed_rule<GL7>(lamt, anchor, s) * std::exp(2.0 * fixed_rule<GL7>(lam, anchor, s));
                    },
                    anchor, to);
            };
            seg(y0, y1, r.dphi_fwd, r.dphit_fwd);
            seg(y1, y0, r.dphi_bwd, r.dphit_bwd);
        }
    });
    // phi(y_k) = phi(y_a) + e^{2 L_a} dphi;  phi_t(y_k) = phi_t(y_a) + e^{2 L_a}(2 Lt_a dphi + dphit)
    tables_.resize(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        Table& tb = tables_[k];
        tb.t = ts[k];
        std::vector<double> L(N, 0.0), Lt(N, 0.0);
        tb.phi.assign(N, 0.0);
        tb.phi_t.assign(N, 0.0);
        const Inc* row = inc.data() + k * segs;
        for (int j = c; j < N - 1; ++j) {
            const Inc& r = row[j];
            const double ea = std::exp(2.0 * L[j]);
            L[j + 1] = L[j] + r.dL;
            Lt[j + 1] = Lt[j] + r.dLt;
            tb.phi[j + 1] = tb.phi[j] + ea * r.dphi_fwd;
            tb.phi_t[j + 1] = tb.phi_t[j] + ea * (2.0 * Lt[j] * r.dphi_fwd + r.dphit_fwd);
        }
        for (int j = c; j > 0; --j) {
            const Inc& r = row[j - 1];
            const double ea = std::exp(2.0 * L[j]);
            L[j - 1] = L[j] - r.dL;
            Lt[j - 1] = Lt[j] - r.dLt;
            tb.phi[j - 1] = tb.phi[j] + ea * r.dphi_bwd;
            tb.phi_t[j - 1] = tb.phi_t[j] + ea * (2.0 * Lt[j] * r.dphi_bwd + r.dphit_bwd);
        }
        tb.phi_y.resize(N);
        tb.lam.resize(N);
        tb.phi_ty.resize(N);
        for (int j = 0; j < N; ++j) {
            tb.phi_y[j] = std::exp(2.0 * L[j]);
            tb.lam[j] = lambda_->value(tb.t, node(j));
            tb.phi_ty[j] = 2.0 * Lt[j] * tb.phi_y[j];
            if (!std::isfinite(tb.phi[j]) || !std::isfinite(tb.phi_y[j]) || !std::isfinite(tb.phi_t[j]))
                throw QuadratureFailure("phi table overflows on [-16, 16]");
            if (!(tb.phi_y[j] > 0.0)) throw NonMonotone("phi_y is not positive");
        }
        for (int j = 0; j + 1 < N; ++j)
            if (!(tb.phi[j + 1] > tb.phi[j])) throw NonMonotone("phi table is not strictly increasing");
    }
}

const PhiTransform::Table* PhiTransform::find(double t) const {
    if (tables_.empty()) return nullptr;
    auto it = std::lower_bound(tables_.begin(), tables_.end(), t, [](const Table& a, double v) { return a.t < v; });
    const double tol = 1e-12 * std::max(1.0, std::fabs(t));
    if (it != tables_.end() && std::fabs(it->t - t) <= tol) return &*it;
    if (it != tables_.begin() && std::fabs((it - 1)->t - t) <= tol) return &*(it - 1);
    return nullptr;
}

namespace {
inline bool locate(double y, double& s, int& j) {
    const double u = (y + PhiTransform::kTableRange) * PhiTransform::kNodesPerUnit;
    const int N = static_cast<int>(2 * PhiTransform::kTableRange * PhiTransform::kNodesPerUnit) + 1;
    if (!(u >= 0.0) || u > N - 1) return false;
    j = std::min(static_cast<int>(u), N - 2);
    s = u - j;
    return true;
}
}  // namespace

double PhiTransform::phi_fast(double t, double y) const {
    if (identity_) return y;
    const Table* tb = find(t);
    double s;
    int j;
    if (!tb || !locate(y, s, j)) return phi(t, y);
    const double dx = 1.0 / kNodesPerUnit;
    return hermite(s, dx, tb->phi[j], tb->phi_y[j], tb->phi[j + 1], tb->phi_y[j + 1]);
}

double PhiTransform::phi_y_fast(double t, double y) const {
    if (identity_) return 1.0;
    const Table* tb = find(t);
    double s;
    int j;
    if (!tb || !locate(y, s, j)) return phi_y(t, y);
    const double dx = 1.0 / kNodesPerUnit;
    return hermite(s, dx, tb->phi_y[j], 2.0 * tb->lam[j] * tb->phi_y[j], tb->phi_y[j + 1],
                   2.0 * tb->lam[j + 1] * tb->phi_y[j + 1]);
}

double PhiTransform::phi_t_fast(double t, double y) const {
    if (identity_) return 0.0;
    const Table* tb = find(t);
    double s;
    int j;
    if (!tb || !locate(y, s, j)) return phi_t(t, y);
    const double dx = 1.0 / kNodesPerUnit;
    return hermite(s, dx, tb->phi_t[j], tb->phi_ty[j], tb->phi_t[j + 1], tb->phi_ty[j + 1]);
}

double PhiTransform::phi_inv_fast(double t, double ybar) const {
    if (identity_) return ybar;
    const Table* tb = find(t);
    if (!tb || !(ybar >= tb->phi.front() && ybar <= tb->phi.back())) return phi_inv(t, ybar);
    const int j = std::clamp(static_cast<int>(std::upper_bound(tb->phi.begin(), tb->phi.end(), ybar) - tb->phi.begin()) - 1, 0,
                             static_cast<int>(tb->phi.size()) - 2);
    const double dx = 1.0 / kNodesPerUnit;
    const double f0 = tb->phi[j], f1 = tb->phi[j + 1], d0 = tb->phi_y[j], d1 = tb->phi_y[j + 1];
    double lo = 0.0, hi = 1.0;
    double s = std::clamp((ybar - f0) / (f1 - f0), 0.0, 1.0);
    for (int it = 0; it < 60; ++it) {
        const double f = hermite(s, dx, f0, d0, f1, d1) - ybar;
        if (f == 0.0) break;
        if (f > 0) hi = s;
        else lo = s;
        const double dp = hermite_d(s, dx, f0, d0, f1, d1) * dx;  // d/ds
        double next = dp > 0 ? s - f / dp : 0.5 * (lo + hi);
        if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
        // s is in [0, 1] and scaled by dx, so 1e-14 in s is below double resolution in y
        if (std::fabs(next - s) <= 1e-14) {
            s = next;
            break;
        }
        s = next;
    }
    return -kTableRange + (j + s) * dx;
}

// ---------------------------------------------------------------------------

ExpectationUse TransformedGenerator::expectation_use(std::size_t k) const {
    ExpectationUse u = base_->expectation_use(k);
    if (u.zzeta) u.y_at_zeta = true;
    return u;
}

double TransformedGenerator::expectation_integrand(std::size_t k, double t, const Anticipated& a) const {
    const ExpectationUse u = base_->expectation_use(k);
    Anticipated b = a;
    double yd = 0.0, yz = 0.0, zz = 0.0;
    if (u.ydelta && a.ydelta) {
        yd = phi_->phi_inv_fast(a.t_delta, a.ydelta[0]);
        b.ydelta = &yd;
    }
    if ((u.zzeta || u.y_at_zeta) && a.y_at_zeta) {
        yz = phi_->phi_inv_fast(a.t_zeta, a.y_at_zeta[0]);
        b.y_at_zeta = &yz;
        if (a.zzeta) {
            zz = a.zzeta[0] / phi_->phi_y_fast(a.t_zeta, yz);
            b.zzeta = &zz;
        }
    }
    return base_->expectation_integrand(k, t, b);
}

void TransformedGenerator::evaluate(double t, const double* ybar, const double* zbar, const double* e, double* out) const {
    const double y = phi_->phi_inv_fast(t, ybar[0]);
    const double py = phi_->phi_y_fast(t, y);
    const double z = zbar[0] / py;
    double f = 0.0;
    base_->evaluate(t, &y, &z, e, &f);
    out[0] = py * f - phi_->phi_t_fast(t, y);
}

void TransformedTerminal::evaluate(double t, const double* w, double* out) const {
    double xi = 0.0;
    xi_->evaluate(t, w, &xi);
    if (!eta_) {
        out[0] = phi_->phi_fast(t, xi);
        return;
    }
    double eta = 0.0;
    eta_->evaluate(t, w, &eta);
    out[0] = phi_->phi_y_fast(t, xi) * eta;
}

std::string TransformedTerminal::describe() const {
    return eta_ ? "phi_y(t, " + xi_->describe() + ") * " + eta_->describe() : "phi(t, " + xi_->describe() + ")";
}

}  // namespace absde
