#include "twoview/outlier.hpp"

#include <cmath>

#include "twoview/errors.hpp"

namespace twoview::outlier {

namespace {

constexpr double kZMaxOffset = 50.0;

struct Quad {
    double pp, qq, pq;  // p^T T p, q^T T q, p^T T q of the solved system
    double r, s;
    double kappa;
};

// quadratic forms of T against p = A^{1/2} e1, q = A^{1/2} e2
Quad quad_forms(const deteq::DetSolution& sol) {
    double kap = sol.kappa;
    double u = 0.5 * (std::sqrt(1.0 + kap) + std::sqrt(1.0 - kap));
    double v = 0.5 * (std::sqrt(1.0 + kap) - std::sqrt(1.0 - kap));
    double t11 = sol.T(0, 0).real(), t22 = sol.T(1, 1).real(), t12 = sol.T(0, 1).real();
    Quad q;
    q.pp = u * u * t11 + 2.0 * u * v * t12 + v * v * t22;
    q.qq = v * v * t11 + 2.0 * u * v * t12 + u * u * t22;
    q.pq = u * v * (t11 + t22) + (u * u + v * v) * t12;
    q.r = sol.r.real();
    q.s = sol.s.real();
    q.kappa = kap;
    return q;
}

Guess effective_guess(const LimitModel& model, const std::optional<Guess>& guess) {
    Guess g = guess.value_or(Guess{model.alpha, model.beta});
    LimitModel gm = model.kind == ModelKind::CSWig ? LimitModel::cswig(g.first, g.second)
                                                   : LimitModel::cswish(g.first, g.second, model.tau);
    double kap = theory::kappa(gm);
    if (!(kap > 0.0 && kap < 1.0))
        throw ValidationError("inadmissible guess: kappa~ outside (0,1)");
    return g;
}

LimitModel guess_model(const LimitModel& model, const Guess& g) {
    return model.kind == ModelKind::CSWig ? LimitModel::cswig(g.first, g.second)
                                          : LimitModel::cswish(g.first, g.second, model.tau);
}

// eigenvalues of a symmetric 2x2
void eig2(const Mat2& s, double& lo, double& hi, Vec2* vec_lo = nullptr,
          Vec2* vec_hi = nullptr) {
    double tr = s(0, 0) + s(1, 1);
    double d = s(0, 0) - s(1, 1);
    double disc = std::sqrt(d * d + 4.0 * s(0, 1) * s(0, 1));
    lo = 0.5 * (tr - disc);
    hi = 0.5 * (tr + disc);
    auto vec_for = [&](double lam, Vec2& out) {
        Vec2 r0(s(0, 0) - lam, s(0, 1));
        Vec2 r1(s(0, 1), s(1, 1) - lam);
        Vec2 w = r0.norm() > r1.norm() ? Vec2(-r0(1), r0(0)) : Vec2(-r1(1), r1(0));
        if (w.norm() < 1e-300) w = Vec2(1, 0);
        out = w / w.norm();
        int imax = std::abs(out(0)) >= std::abs(out(1)) ? 0 : 1;
        if (out(imax) < 0) out = -out;
    };
    if (vec_lo) vec_for(lo, *vec_lo);
    if (vec_hi) vec_for(hi, *vec_hi);
}

// classic Brent root finder on a bracketing interval
template <typename F>
double brent(const F& f, double a, double b, double fa, double fb, double xtol) {
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
        double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q, r, ss = fb / fa;
            if (a == c) {
                p = 2.0 * xm * ss;
                q = 1.0 - ss;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = ss * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (ss - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    return b;
}

}  // namespace

Mat2 build_s(const LimitModel& model, double rho, double z, std::optional<Guess> guess) {
    if (rho < 0.0 || rho > 1.0) throw ValidationError("build_s: rho must lie in [0,1]");
    Mat2 s;
    if (model.kind == ModelKind::CCA) {
        deteq::DetSolution sol = deteq::solve_system(model, z);
        double kap = sol.kappa;
        s(0, 0) = 1.0 / sol.r.real();
        s(1, 1) = 1.0 / sol.s.real();
        s(0, 1) = s(1, 0) = -rho / kap * sol.T(0, 1).real();
        return s;
    }
    Guess g = effective_guess(model, guess);
    deteq::DetSolution sol = deteq::solve_system(guess_model(model, g), z);
    Quad q = quad_forms(sol);
    if (model.kind == ModelKind::CSWig) {
        double w1 = model.alpha * g.first;   // Theta~ = diag(alpha alpha~, beta beta~)
        double w2 = model.beta * g.second;
        s(0, 0) = 1.0 + w1 * q.pp;
        s(1, 1) = 1.0 + w2 * q.qq;
        s(0, 1) = s(1, 0) = rho * std::sqrt(w1 * w2) * q.pq;
        return s;
    }
    double th1 = g.first / (1.0 + g.first);
    double th2 = g.second / (1.0 + g.second);
    double w1 = model.alpha * th1;
    double w2 = model.beta * th2;
    s(0, 0) = w1 * q.pp - 1.0 / (model.tau * q.r);
    s(1, 1) = w2 * q.qq - 1.0 / (model.tau * q.s);
    s(0, 1) = s(1, 0) = rho * std::sqrt(w1 * w2) * q.pq;
    return s;
}

Mat2 s_at_edge(const LimitModel& model, double rho, std::optional<Guess> guess, double delta) {
    // r,s,T behave like c0 + c1 sqrt(z-edge) + c2 (z-edge) off the edge;
    // three probes at delta*{1,4,16} cancel the first two correction terms
    double e = deteq::edge(model);
    Mat2 s1 = build_s(model, rho, e + delta, guess);
    Mat2 s2 = build_s(model, rho, e + 4.0 * delta, guess);
    Mat2 s3 = build_s(model, rho, e + 16.0 * delta, guess);
    return (8.0 * s1 - 6.0 * s2 + s3) / 3.0;
}

Mat2 ds_dz(const LimitModel& model, double rho, double z, std::optional<Guess> guess) {
    double e = deteq::edge(model);
    if (z <= e + 1e-6) throw DomainError("ds_dz: z must exceed edge + 1e-6");
    double h = 1e-6 * std::max(1.0, std::abs(z));
    h = std::min(h, 0.45 * (z - e));  // keep the stencil right of the edge
    auto diff = [&](double hh) {
        Mat2 sp = build_s(model, rho, z + hh, guess);
        Mat2 sm = build_s(model, rho, z - hh, guess);
        return Mat2(((sp - sm) / (2.0 * hh)).eval());
    };
    Mat2 d1 = diff(h), d2 = diff(0.5 * h);
    return (4.0 * d2 - d1) / 3.0;  // one Richardson step
}

OutlierPrediction find_outlier(const LimitModel& model, double rho, std::optional<Guess> guess) {
    OutlierPrediction pred;
    pred.is_lower_bound = model.kind != ModelKind::CCA;

    Guess g{model.alpha, model.beta};
    if (model.kind == ModelKind::CCA) {
        pred.threshold = theory::kappa(model);
    } else {
        g = effective_guess(model, guess);
        bool matched = !guess || (g.first == model.alpha && g.second == model.beta);
        pred.threshold = matched ? theory::kappa(model)
                                 : theory::rho_out(g, {model.alpha, model.beta}, model.tau,
                                                   model.kind);
    }

    pred.edge_det = s_at_edge(model, rho, guess).determinant();
    if (!(pred.edge_det < 0.0)) return pred;  // no eigenvalue crossing
    pred.exists = true;

    const bool cca = model.kind == ModelKind::CCA;
    const double e = deteq::edge(model);
    // crossing eigenvalue: largest for CCA (eigenvalues decrease in z),
    // smallest for the spiked models (they increase)
    auto f = [&](double z) {
        double lo, hi;
        eig2(build_s(model, rho, z, guess), lo, hi);
        return cca ? hi : lo;
    };

    double zlo = 0.0, flo = 0.0;
    bool anchored = false;
    for (double d : {1e-6, 1e-8, 2e-9}) {
        zlo = e + d;
        flo = f(zlo);
        if ((cca && flo > 0.0) || (!cca && flo < 0.0)) {
            anchored = true;
            break;
        }
    }
    if (anchored) {
        double zhi = 0.0, fhi = 0.0;
        bool bracketed = false;
        for (double off : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, kZMaxOffset}) {
            zhi = e + off;
            fhi = f(zhi);
            if ((fhi > 0.0) != (flo > 0.0)) {
                bracketed = true;
                break;
            }
            zlo = zhi;
            flo = fhi;
        }
        if (!bracketed)
            throw NumericalError("find_outlier: no sign change of the crossing eigenvalue below edge+" +
                                 std::to_string(kZMaxOffset));
        pred.lambda_out = brent(f, zlo, zhi, flo, fhi, 1e-10);
    } else {
        pred.lambda_out = zlo;  // root pinched against the edge
    }

    Mat2 s_star = build_s(model, rho, pred.lambda_out, guess);
    double lo, hi;
    Vec2 vlo, vhi;
    eig2(s_star, lo, hi, &vlo, &vhi);
    pred.kernel_vector = std::abs(lo) <= std::abs(hi) ? vlo : vhi;

    // roots pinched against the edge (barely-above-threshold models) leave no
    // room for the difference stencil; probe the derivative just inside the
    // admissible band, where the overlaps are ~0 anyway
    double zd = std::max(pred.lambda_out, e + 2e-6);
    pred.ds_dz = ds_dz(model, rho, zd, guess);
    const Vec2& x = pred.kernel_vector;
    double qform = x.dot(pred.ds_dz * x);

    if (cca) {
        double denom = -qform;  // dS/dz <= -I, so this is positive
        pred.overlap_a = x(0) * x(0) / denom;
        pred.overlap_b = x(1) * x(1) / denom;
    } else {
        LimitModel gm = guess_model(model, g);
        double kap_g = theory::kappa(gm);
        if (model.kind == ModelKind::CSWig) {
            pred.overlap_a = x(0) * x(0) / (model.alpha * g.first * (1.0 + kap_g) * qform);
            pred.overlap_b = x(1) * x(1) / (model.beta * g.second * (1.0 + kap_g) * qform);
        } else {
            deteq::DetSolution sol = deteq::solve_system(gm, zd);
            double th1 = g.first / (1.0 + g.first), th2 = g.second / (1.0 + g.second);
            double rr = sol.r.real(), ss = sol.s.real();
            double t2 = model.tau * model.tau;
            pred.overlap_a =
                x(0) * x(0) / (t2 * rr * rr * model.alpha * th1 * (1.0 + kap_g) * qform);
            pred.overlap_b =
                x(1) * x(1) / (t2 * ss * ss * model.beta * th2 * (1.0 + kap_g) * qform);
        }
    }
    return pred;
}

}  // namespace twoview::outlier
