#include "twoview/theory.hpp"

#include <cmath>

#include "twoview/errors.hpp"

namespace twoview::theory {

double kappa(const LimitModel& model) {
    if (model.kind == ModelKind::CCA) {
        if (model.tau_m <= 0.0 || model.tau_k <= 0.0)
            throw ValidationError("kappa: aspect ratios must be positive");
        return std::pow(model.tau_m * model.tau_k, -0.25);
    }
    double tau = model.kind == ModelKind::CSWig ? 1.0 : model.tau;
    double a2 = tau * model.alpha * model.alpha;
    double b2 = tau * model.beta * model.beta;
    if (model.alpha <= 0.0 || model.beta <= 0.0 || a2 > 1.0 || b2 > 1.0)
        throw DomainError("kappa: spiked model outside single-view-uninformative regime");
    return std::pow((1.0 - a2) * (1.0 - b2) / (a2 * b2), 0.25);
}

double lambda_star(const LimitModel& model) {
    if (model.kind == ModelKind::CCA) {
        double kap = kappa(model);
        return (1.0 - kap * kap) / kap;
    }
    return 1.0;
}

ThresholdReport threshold_report(const LimitModel& model, double rho,
                                 std::optional<Guess> guess) {
    ThresholdReport rep;
    rep.kappa = kappa(model);
    rep.lambda_star = lambda_star(model);
    double diff = rho - rep.kappa;
    rep.regime = std::abs(diff) <= 1e-12 ? Regime::At : (diff > 0.0 ? Regime::Above : Regime::Below);
    if (guess && model.kind != ModelKind::CCA)
        rep.rho_out_mismatched =
            rho_out(*guess, {model.alpha, model.beta}, model.tau, model.kind);
    return rep;
}

double rho_out(const Guess& guess, const Guess& truth, double tau, ModelKind kind) {
    if (kind == ModelKind::CCA) throw ValidationError("rho_out: defined for spiked models only");
    auto [ga, gb] = guess;
    auto [ta, tb] = truth;
    LimitModel gm = kind == ModelKind::CSWig ? LimitModel::cswig(ga, gb)
                                             : LimitModel::cswish(ga, gb, tau);
    // kappa~ must be well defined and positive; the formula itself remains
    // meaningful for kappa~ >= 1 (such grid points just never carry an
    // outlier, so rho_out > 1 there)
    double kap_g = kappa(gm);
    if (!(kap_g > 0.0))
        throw ValidationError("rho_out: guess is inadmissible (kappa~ not positive)");
    double inv_tau = kind == ModelKind::CSWig ? 1.0 : 1.0 / tau;
    double num = (inv_tau - ta * ga) * (inv_tau - tb * gb);
    if (num < 0.0) throw DomainError("rho_out: negative product under the square root");
    return std::sqrt(num) / (kap_g * std::sqrt(ta * tb * ga * gb));
}

double saddle_exponent(double s, double t, double rho, int n, int m, int k) {
    if (std::abs(s) >= 1.0 || std::abs(t) >= 1.0)
        throw DomainError("saddle_exponent: s,t must lie in (-1,1)");
    return -std::log(1.0 - rho * rho * s * t) +
           (m - 3) / (2.0 * n) * std::log(1.0 - s * s) +
           (k - 3) / (2.0 * n) * std::log(1.0 - t * t);
}

double log_overlap_const(int m) {
    // normalization of f_m(s) = c_m (1-s^2)^{(m-3)/2}:
    // 1/c_m = B(1/2, (m-1)/2) = sqrt(pi) Gamma((m-1)/2) / Gamma(m/2)
    return std::lgamma(m / 2.0) - std::lgamma((m - 1) / 2.0) - 0.5 * std::log(M_PI);
}

namespace {

// 15-point Gauss-Legendre on [-1,1]
constexpr int kGL = 15;
constexpr double kGLx[kGL] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGLw[kGL] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

template <typename F>
double gl15(const F& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kGL; ++i) acc += kGLw[i] * f(mid + half * kGLx[i]);
    return acc * half;
}

template <typename F>
double adaptive(const F& f, double a, double b, double tol, double whole, int depth) {
    double mid = 0.5 * (a + b);
    double left = gl15(f, a, mid), right = gl15(f, mid, b);
    if (depth <= 0) return left + right;
    if (std::abs(left + right - whole) <= tol * (std::abs(left + right) + 1e-300) ||
        std::abs(left + right - whole) < 1e-306)
        return left + right;
    return adaptive(f, a, mid, tol, left, depth - 1) +
           adaptive(f, mid, b, tol, right, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
    return adaptive(f, a, b, tol, gl15(f, a, b), 40);
}

}  // namespace

double chi2_second_moment(double rho, int n, int m, int k, double rel_tol) {
    LimitModel lim = LimitModel::cca(static_cast<double>(n) / m, static_cast<double>(n) / k);
    if (rho >= kappa(lim))
        throw DomainError("chi2_second_moment: rho >= kappa, integral diverges with n");
    double logc = log_overlap_const(m) + log_overlap_const(k);
    auto outer = [&](double s) {
        auto inner = [&](double t) {
            return std::exp(logc + n * saddle_exponent(s, t, rho, n, m, k));
        };
        return integrate(inner, -1.0, 1.0, rel_tol * 0.1);
    };
    return integrate(outer, -1.0, 1.0, rel_tol * 0.3);
}

double second_moment_condition(const LimitModel& model, double rho) {
    if (model.kind == ModelKind::CCA)
        throw ValidationError("second_moment_condition: spiked models only");
    double tau = model.kind == ModelKind::CSWig ? 1.0 : model.tau;
    double a2 = tau * model.alpha * model.alpha;
    double b2 = tau * model.beta * model.beta;
    return (1.0 - a2) * (1.0 - b2) - a2 * b2 * rho * rho * rho * rho;
}

}  // namespace twoview::theory
