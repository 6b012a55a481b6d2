#include "twoview/deteq.hpp"

#include <cmath>
#include <sstream>

#include "twoview/errors.hpp"
#include "twoview/rng.hpp"
#include "twoview/theory.hpp"

namespace twoview::deteq {

namespace {

using Vec2c = Eigen::Vector2cd;

struct System {
    LimitModel model;
    double kap;           // threshold kappa of the model
    double gamma = 0.0;   // CCA coupling constant kappa/(kappa^2-1)
    double u = 0.0, v = 0.0;  // entries of A^{1/2} for the spiked models
    double theta1 = 0.0, theta2 = 0.0;  // Wishart alpha/(1+alpha), beta/(1+beta)

    explicit System(const LimitModel& m) : model(m), kap(theory::kappa(m)) {
        if (!(kap < 1.0))
            throw DomainError(m.kind == ModelKind::CCA
                                  ? "CCA statistic needs tau_m * tau_k > 1 (kappa < 1)"
                                  : "spiked statistic needs kappa < 1");
        if (m.kind == ModelKind::CCA) {
            gamma = kap / (kap * kap - 1.0);
        } else {
            u = 0.5 * (std::sqrt(1.0 + kap) + std::sqrt(1.0 - kap));
            v = 0.5 * (std::sqrt(1.0 + kap) - std::sqrt(1.0 - kap));
            theta1 = m.alpha / (1.0 + m.alpha);
            theta2 = m.beta / (1.0 + m.beta);
        }
    }

    // T from (r,s): closed-form 2x2 inversions of the defining matrix.
    Mat2c t_of(Complex z, Complex r, Complex s) const {
        Mat2c t;
        if (model.kind == ModelKind::CCA) {
            Complex d = 1.0 - kap * (r + s) - (1.0 - kap * kap) * r * s;
            Complex kd = kap * d;
            t(0, 0) = (kap + (1.0 - kap * kap) * s) / kd;
            t(1, 1) = (kap + (1.0 - kap * kap) * r) / kd;
            t(0, 1) = t(1, 0) = -1.0 / kd;
            return t;
        }
        Complex c1, c2;
        if (model.kind == ModelKind::CSWig) {
            c1 = model.alpha * model.alpha * (1.0 + r);
            c2 = model.beta * model.beta * (1.0 + s);
        } else {
            c1 = model.tau * (model.alpha + theta1 * r);
            c2 = model.tau * (model.beta + theta2 * s);
        }
        // M = z I + c1 p p^T + c2 q q^T with p=(u,v), q=(v,u); T = -M^{-1}
        Complex m11 = z + c1 * u * u + c2 * v * v;
        Complex m22 = z + c1 * v * v + c2 * u * u;
        Complex m12 = (c1 + c2) * u * v;
        Complex det = m11 * m22 - m12 * m12;
        t(0, 0) = -m22 / det;
        t(1, 1) = -m11 / det;
        t(0, 1) = t(1, 0) = m12 / det;
        return t;
    }

    Complex quad_pp(const Mat2c& t) const {
        return u * u * t(0, 0) + 2.0 * u * v * t(0, 1) + v * v * t(1, 1);
    }
    Complex quad_qq(const Mat2c& t) const {
        return v * v * t(0, 0) + 2.0 * u * v * t(0, 1) + u * u * t(1, 1);
    }

    // one fixed-point sweep (r,s) -> (r',s')
    void step(Complex z, Complex r, Complex s, Complex& rn, Complex& sn) const {
        Mat2c t = t_of(z, r, s);
        switch (model.kind) {
            case ModelKind::CCA:
                rn = 1.0 / (-z - kap * model.tau_m * t(0, 0));
                sn = 1.0 / (-z - kap * model.tau_k * t(1, 1));
                break;
            case ModelKind::CSWig:
                rn = quad_pp(t);
                sn = quad_qq(t);
                break;
            case ModelKind::CSWish:
                rn = 1.0 / (-1.0 - theta1 * quad_pp(t));
                sn = 1.0 / (-1.0 - theta2 * quad_qq(t));
                break;
        }
    }

    // max defect of the defining equations at (r,s)
    double defect(Complex z, Complex r, Complex s) const {
        Mat2c t = t_of(z, r, s);
        double e = 0.0;
        if (model.kind == ModelKind::CCA) {
            e = std::max(std::abs(r * (-z - kap * model.tau_m * t(0, 0)) - 1.0),
                         std::abs(s * (-z - kap * model.tau_k * t(1, 1)) - 1.0));
            Complex g = gamma;
            Mat2c b;
            b(0, 0) = g * kap - kap * r;
            b(1, 1) = g * kap - kap * s;
            b(0, 1) = b(1, 0) = g;
            Mat2c defm = t * b - Mat2c::Identity();
            e = std::max(e, defm.cwiseAbs().maxCoeff());
        } else if (model.kind == ModelKind::CSWig) {
            e = std::max(std::abs(r - quad_pp(t)), std::abs(s - quad_qq(t)));
        } else {
            e = std::max(std::abs(r * (-1.0 - theta1 * quad_pp(t)) - 1.0),
                         std::abs(s * (-1.0 - theta2 * quad_qq(t)) - 1.0));
        }
        return e;
    }

    // large-|z| asymptotic initialization
    void init(Complex z, Complex& r, Complex& s) const {
        if (model.kind == ModelKind::CSWish) {
            r = -1.0 - theta1 / z;
            s = -1.0 - theta2 / z;
        } else {
            r = -1.0 / z;
            s = -1.0 / z;
        }
    }

    // The Stieltjes branch: Im r, Im s > 0 above the axis; on the real axis
    // right of the edge (r,s) stay in a model-specific open box.
    bool on_branch(Complex z, Complex r, Complex s) const {
        if (z.imag() > 0.0) return r.imag() > 0.0 && s.imag() > 0.0;
        double rr = r.real(), ss = s.real();
        switch (model.kind) {
            case ModelKind::CCA: {
                double lstar = (1.0 - kap * kap) / kap;
                double lo = -1.0 / lstar - 1e-9;
                return rr > lo && rr < 0.0 && ss > lo && ss < 0.0;
            }
            case ModelKind::CSWig:
                return rr > -1.0 - 1e-9 && rr < 0.0 && ss > -1.0 - 1e-9 && ss < 0.0;
            case ModelKind::CSWish:
                return rr > -1.0 - model.alpha - 1e-9 && rr < -1.0 + 1e-9 &&
                       ss > -1.0 - model.beta - 1e-9 && ss < -1.0 + 1e-9;
        }
        return false;
    }
};

constexpr double kResidTol = 1e-12;
constexpr int kIterCap = 10000;

// damped fixed-point iteration, halving the step when the defect grows
int damped_iterate(const System& sys, Complex z, Complex& r, Complex& s, int budget,
                   double tol) {
    double res = sys.defect(z, r, s);
    int it = 0;
    for (; it < budget && res > tol; ++it) {
        Complex rn, sn;
        sys.step(z, r, s, rn, sn);
        double omega = 0.5;
        bool moved = false;
        for (int h = 0; h < 12; ++h) {
            Complex rt = (1.0 - omega) * r + omega * rn;
            Complex st = (1.0 - omega) * s + omega * sn;
            double rt_res = sys.defect(z, rt, st);
            if (rt_res < res) {
                r = rt;
                s = st;
                res = rt_res;
                moved = true;
                break;
            }
            omega *= 0.5;
        }
        if (!moved) break;  // stagnated; Newton takes over
    }
    return it;
}

// Newton on F(r,s) = (r,s) - step(r,s); the map is holomorphic in (r,s), so
// central complex differences give the Jacobian. Steps are backtracked when
// they leave the Stieltjes branch or increase the defect.
int newton_polish(const System& sys, Complex z, Complex& r, Complex& s, double tol) {
    auto fval = [&](Complex rr, Complex ss, Complex& f1, Complex& f2) {
        Complex rn, sn;
        sys.step(z, rr, ss, rn, sn);
        f1 = rr - rn;
        f2 = ss - sn;
    };
    int it = 0;
    for (; it < 60; ++it) {
        double res = sys.defect(z, r, s);
        if (res <= tol) break;
        Complex f1, f2;
        fval(r, s, f1, f2);
        double h1 = 1e-7 * (1.0 + std::abs(r)), h2 = 1e-7 * (1.0 + std::abs(s));
        Complex a1, a2, b1, b2, c1, c2, d1, d2;
        fval(r + h1, s, a1, a2);
        fval(r - h1, s, b1, b2);
        fval(r, s + h2, c1, c2);
        fval(r, s - h2, d1, d2);
        Mat2c jac;
        jac(0, 0) = (a1 - b1) / (2.0 * h1);
        jac(1, 0) = (a2 - b2) / (2.0 * h1);
        jac(0, 1) = (c1 - d1) / (2.0 * h2);
        jac(1, 1) = (c2 - d2) / (2.0 * h2);
        Vec2c rhs;
        rhs << f1, f2;
        Vec2c dx = jac.fullPivLu().solve(rhs);
        if (!std::isfinite(std::abs(dx(0))) || !std::isfinite(std::abs(dx(1)))) break;
        double lam = 1.0;
        bool ok = false;
        for (int bt = 0; bt < 30; ++bt) {
            Complex rt = r - lam * dx(0), st = s - lam * dx(1);
            if (sys.on_branch(z, rt, st) && sys.defect(z, rt, st) < res) {
                r = rt;
                s = st;
                ok = true;
                break;
            }
            lam *= 0.5;
        }
        if (!ok) break;
    }
    return it;
}

DetSolution finish(const System& sys, Complex z, Complex r, Complex s, int iters) {
    DetSolution sol;
    sol.z = z;
    sol.r = r;
    sol.s = s;
    sol.T = sys.t_of(z, r, s);
    sol.model = sys.model;
    sol.kappa = sys.kap;
    sol.residual = sys.defect(z, r, s);
    sol.iterations = iters;
    if (sol.residual > 1e-11 || !sys.on_branch(z, r, s)) {
        std::ostringstream msg;
        msg << "deteq: no convergence at z=(" << z.real() << "," << z.imag()
            << "), last iterate r=(" << r.real() << "," << r.imag() << ") s=(" << s.real()
            << "," << s.imag() << "), residual=" << sol.residual;
        throw NumericalError(msg.str());
    }
    return sol;
}

void check_domain(const LimitModel& model, Complex z) {
    if (z.imag() > 0.0) return;
    if (z.imag() < 0.0)
        throw DomainError("deteq: lower half-plane not supported; conjugate the query");
    if (z.real() <= edge(model) + 1e-9)
        throw DomainError("deteq: real z at or below the bulk edge");
}

}  // namespace

double edge(const LimitModel& model) { return theory::lambda_star(model); }

DetSolution solve_system(const LimitModel& model, Complex z) {
    check_domain(model, z);
    System sys(model);

    // geometric continuation from the large-|z| regime toward the target;
    // real targets keep the path (and the arithmetic) on the real axis
    bool real_axis = z.imag() == 0.0;
    double h = 10.0;
    Complex r, s;
    sys.init(real_axis ? Complex(z.real() + h, 0.0) : Complex(z.real(), z.imag() + h), r, s);

    int total = 0;
    while (true) {
        Complex zj = real_axis ? Complex(z.real() + h, 0.0) : Complex(z.real(), z.imag() + h);
        total += damped_iterate(sys, zj, r, s, 300, kResidTol);
        total += newton_polish(sys, zj, r, s, kResidTol);
        if (h < 1e-10) break;
        h *= 0.5;
    }
    total += damped_iterate(sys, z, r, s, std::max(0, kIterCap - total), kResidTol);
    total += newton_polish(sys, z, r, s, kResidTol);
    return finish(sys, z, r, s, total);
}

MultistartReport solve_multistart(const LimitModel& model, Complex z, int starts,
                                  std::uint64_t seed) {
    check_domain(model, z);
    System sys(model);
    rng::Stream st(seed, "deteq.multistart");

    std::vector<DetSolution> sols;
    for (int i = 0; i < starts; ++i) {
        Complex r, s;
        if (z.imag() > 0.0) {
            r = Complex(-2.0 * st.uniform(), 0.05 + 2.0 * st.uniform());
            s = Complex(-2.0 * st.uniform(), 0.05 + 2.0 * st.uniform());
        } else if (model.kind == ModelKind::CSWish) {
            r = Complex(-1.0 - model.alpha * st.uniform(), 0.0);
            s = Complex(-1.0 - model.beta * st.uniform(), 0.0);
        } else {
            double lo = model.kind == ModelKind::CCA ? -1.0 / edge(model) : -1.0;
            r = Complex(lo * (0.02 + 0.96 * st.uniform()), 0.0);
            s = Complex(lo * (0.02 + 0.96 * st.uniform()), 0.0);
        }
        int it = damped_iterate(sys, z, r, s, kIterCap, kResidTol);
        it += newton_polish(sys, z, r, s, kResidTol);
        sols.push_back(finish(sys, z, r, s, it));
    }

    MultistartReport rep;
    rep.solution = sols.front();
    rep.starts = starts;
    for (size_t i = 0; i < sols.size(); ++i)
        for (size_t j = i + 1; j < sols.size(); ++j) {
            double d = std::abs(sols[i].r - sols[j].r);
            d = std::max(d, std::abs(sols[i].s - sols[j].s));
            d = std::max(d, (sols[i].T - sols[j].T).cwiseAbs().maxCoeff());
            rep.max_deviation = std::max(rep.max_deviation, d);
        }
    return rep;
}

Complex stieltjes_of_w(const LimitModel& model, Complex z) {
    DetSolution sol = solve_system(model, z);
    if (model.kind == ModelKind::CCA)
        return (model.tau_k * sol.r + model.tau_m * sol.s) / (model.tau_k + model.tau_m);
    return 0.5 * (sol.T(0, 0) + sol.T(1, 1));
}

double limiting_density(const LimitModel& model, double x, double eta) {
    if (!(eta > 0.0 && eta <= 0.1))
        throw ValidationError("limiting_density: eta must lie in (0, 0.1]");
    return stieltjes_of_w(model, Complex(x, eta)).imag() / M_PI;
}

}  // namespace twoview::deteq
