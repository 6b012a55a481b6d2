#include "twoview/spectral.hpp"

#include <cmath>

#include "twoview/errors.hpp"

namespace twoview::spectral {

namespace {

constexpr int kDensePathLimit = 1024;

double cca_kappa_from_shapes(const TwoViewInstance& inst) {
    double tau_m = inst.params.tau_m(), tau_k = inst.params.tau_k();
    if (tau_m * tau_k <= 1.0)
        throw DomainError("CCA statistic needs tau_m * tau_k > 1 (kappa < 1)");
    return std::pow(tau_m * tau_k, -0.25);
}

}  // namespace

StatCoeffs stat_coeffs(ModelKind kind, double tau, const Guess& g) {
    auto [ga, gb] = g;
    LimitModel gm = kind == ModelKind::CSWig ? LimitModel::cswig(ga, gb)
                                             : LimitModel::cswish(ga, gb, tau);
    double kap = theory::kappa(gm);
    if (!(kap > 0.0 && kap < 1.0))
        throw ValidationError("inadmissible guess: kappa~ outside (0,1)");
    StatCoeffs c;
    c.kappa = kap;
    c.u = 0.5 * (std::sqrt(1.0 + kap) + std::sqrt(1.0 - kap));
    c.v = 0.5 * (std::sqrt(1.0 + kap) - std::sqrt(1.0 - kap));
    if (kind == ModelKind::CSWig) {
        c.a_lin = ga;
        c.a_shift = ga * ga;
        c.b_lin = gb;
        c.b_shift = gb * gb;
    } else {
        c.a_lin = ga / (1.0 + ga);
        c.a_shift = ga * tau;
        c.b_lin = gb / (1.0 + gb);
        c.b_shift = gb * tau;
    }
    return c;
}

SpikedGram make_spiked_gram(const TwoViewInstance& inst) {
    SpikedGram g;
    if (inst.params.kind == ModelKind::CSWig) {
        g.su = &inst.U;
        g.sv = &inst.V;
        g.half = inst.params.n;
    } else {
        g.su_store = Matrix::Zero(inst.params.m, inst.params.m);
        g.sv_store = Matrix::Zero(inst.params.m, inst.params.m);
        g.su_store.selfadjointView<Eigen::Lower>().rankUpdate(inst.U.transpose());
        g.sv_store.selfadjointView<Eigen::Lower>().rankUpdate(inst.V.transpose());
        g.su_store.triangularView<Eigen::Upper>() = g.su_store.transpose();
        g.sv_store.triangularView<Eigen::Upper>() = g.sv_store.transpose();
        g.su = &g.su_store;
        g.sv = &g.sv_store;
        g.half = inst.params.m;
    }
    return g;
}

void apply_h(const SpikedGram& g, const StatCoeffs& c, const Matrix& x, Matrix& y) {
    const int h = g.half;
    // H w = S diag(Ubar, Vbar) S w with S = A^{1/2} (x) I
    Matrix xs(h, x.cols()), ys(h, x.cols());
    xs.noalias() = c.u * x.topRows(h) + c.v * x.bottomRows(h);
    ys.noalias() = c.v * x.topRows(h) + c.u * x.bottomRows(h);
    Matrix ux(h, x.cols()), vy(h, x.cols());
    ux.noalias() = (*g.su) * xs;
    vy.noalias() = (*g.sv) * ys;
    ux = c.a_lin * ux - c.a_shift * xs;
    vy = c.b_lin * vy - c.b_shift * ys;
    y.resize(2 * h, x.cols());
    y.topRows(h).noalias() = c.u * ux + c.v * vy;
    y.bottomRows(h).noalias() = c.v * ux + c.u * vy;
}

Matrix build_w(const TwoViewInstance& inst, std::optional<Guess> guess) {
    const ModelParams& p = inst.params;
    if (p.kind == ModelKind::CCA) {
        double kap = cca_kappa_from_shapes(inst);
        Matrix w(p.m + p.k, p.m + p.k);
        Matrix utu = Matrix::Zero(p.m, p.m), vtv = Matrix::Zero(p.k, p.k);
        utu.selfadjointView<Eigen::Lower>().rankUpdate(inst.U.transpose());
        utu.triangularView<Eigen::Upper>() = utu.transpose();
        vtv.selfadjointView<Eigen::Lower>().rankUpdate(inst.V.transpose());
        vtv.triangularView<Eigen::Upper>() = vtv.transpose();
        Matrix utv = inst.U.transpose() * inst.V;
        w.topLeftCorner(p.m, p.m) = -kap * utu;
        w.bottomRightCorner(p.k, p.k) = -kap * vtv;
        w.topRightCorner(p.m, p.k) = utv;
        w.bottomLeftCorner(p.k, p.m) = utv.transpose();
        return w;
    }
    Guess g = guess.value_or(Guess{p.alpha, p.beta});
    StatCoeffs c = stat_coeffs(p.kind, p.tau(), g);
    SpikedGram gram = make_spiked_gram(inst);
    const int h = gram.half;
    Matrix ubar = c.a_lin * (*gram.su) - c.a_shift * Matrix::Identity(h, h);
    Matrix vbar = c.b_lin * (*gram.sv) - c.b_shift * Matrix::Identity(h, h);
    Matrix w(2 * h, 2 * h);
    w.topLeftCorner(h, h) = ubar;
    w.topRightCorner(h, h) = c.kappa * vbar;
    w.bottomLeftCorner(h, h) = c.kappa * ubar;
    w.bottomRightCorner(h, h) = vbar;
    return w;
}

namespace {

SpectralResult split_result(const Vector& values, const Vector& top_w, int split_at) {
    SpectralResult res;
    res.eigenvalues = values;
    Vector w = top_w / top_w.norm();
    res.a_hat = w.head(split_at);
    res.b_hat = w.tail(w.size() - split_at);
    return res;
}

SpectralResult eig_symmetric(const Matrix& mat, int k, int split_at,
                             const std::function<Vector(const Vector&)>& to_w) {
    const int dim = static_cast<int>(mat.rows());
    Vector values, top;
    if (dim <= kDensePathLimit) {
        linalg::EigenPairs pairs = linalg::sym_eig(mat, k);
        values = pairs.values;
        top = pairs.vectors.col(0);
    } else {
        linalg::LanczosOptions opts;
        auto apply = [&mat](const Vector& x, Vector& y) {
            y.noalias() = mat.selfadjointView<Eigen::Lower>() * x;
        };
        linalg::LanczosResult lr = linalg::lanczos_topk(apply, dim, k, opts);
        values = lr.values;
        top = lr.vectors.col(0);
    }
    return split_result(values, to_w(top), split_at);
}

}  // namespace

SpectralResult symmetrize_and_eig(const Matrix& w, ModelKind kind, double kappa, int k,
                                  int split_at) {
    const int dim = static_cast<int>(w.rows());
    if (split_at < 0) split_at = dim / 2;
    if (kind == ModelKind::CCA) {
        if (!linalg::is_symmetric(w))
            throw ValidationError("CCA statistic must be symmetric by construction");
        return eig_symmetric(w, k, split_at, [](const Vector& h) { return h; });
    }
    // H = S diag(Ubar, Vbar) S from the diagonal blocks of W; the top right-
    // eigenvector of W is S h / |S h|.
    const int h = dim / 2;
    double uu = 0.5 * (std::sqrt(1.0 + kappa) + std::sqrt(1.0 - kappa));
    double vv = 0.5 * (std::sqrt(1.0 + kappa) - std::sqrt(1.0 - kappa));
    Matrix ubar = w.topLeftCorner(h, h), vbar = w.bottomRightCorner(h, h);
    double scale = std::max(ubar.cwiseAbs().maxCoeff(), vbar.cwiseAbs().maxCoeff()) + 1e-300;
    if ((w.topRightCorner(h, h) - kappa * vbar).cwiseAbs().maxCoeff() > 1e-10 * scale ||
        (w.bottomLeftCorner(h, h) - kappa * ubar).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ValidationError("symmetrize_and_eig: W blocks inconsistent with the given kappa");
    Matrix hm(dim, dim);
    hm.topLeftCorner(h, h) = uu * uu * ubar + vv * vv * vbar;
    hm.bottomRightCorner(h, h) = vv * vv * ubar + uu * uu * vbar;
    hm.topRightCorner(h, h) = uu * vv * (ubar + vbar);
    hm.bottomLeftCorner(h, h) = hm.topRightCorner(h, h);
    auto to_w = [&](const Vector& hvec) {
        Vector out(dim);
        out.head(h) = uu * hvec.head(h) + vv * hvec.tail(h);
        out.tail(h) = vv * hvec.head(h) + uu * hvec.tail(h);
        return out;
    };
    return eig_symmetric(hm, k, split_at, to_w);
}

SpectralResult top_eigs(const TwoViewInstance& inst, std::optional<Guess> guess, int k) {
    const ModelParams& p = inst.params;
    if (p.kind == ModelKind::CCA) {
        Matrix w = build_w(inst, std::nullopt);
        SpectralResult res = symmetrize_and_eig(w, p.kind, cca_kappa_from_shapes(inst), k, p.m);
        return res;
    }
    Guess g = guess.value_or(Guess{p.alpha, p.beta});
    StatCoeffs c = stat_coeffs(p.kind, p.tau(), g);
    SpikedGram gram = make_spiked_gram(inst);
    const int dim = 2 * gram.half;
    if (dim <= kDensePathLimit) {
        SpectralResult res = symmetrize_and_eig(build_w(inst, g), p.kind, c.kappa, k);
        res.guess_params = g;
        return res;
    }
    linalg::LanczosOptions opts;
    auto apply = [&](const Vector& x, Vector& y) {
        Matrix xm = x, ym;
        apply_h(gram, c, xm, ym);
        y = ym.col(0);
    };
    linalg::LanczosResult lr = linalg::lanczos_topk(apply, dim, k, opts);
    Vector top = lr.vectors.col(0);
    Vector w(dim);
    const int h = gram.half;
    w.head(h) = c.u * top.head(h) + c.v * top.tail(h);
    w.tail(h) = c.v * top.head(h) + c.u * top.tail(h);
    SpectralResult res = split_result(lr.values, w, h);
    res.guess_params = g;
    return res;
}

std::pair<double, double> empirical_overlap(const SpectralResult& result,
                                            const TwoViewInstance& inst) {
    if (!inst.planted)
        throw ValidationError("empirical_overlap: instance carries no planted truth");
    Vector a = inst.planted->a / inst.planted->a.norm();
    Vector b = inst.planted->b / inst.planted->b.norm();
    if (a.size() != result.a_hat.size() || b.size() != result.b_hat.size())
        throw ValidationError("empirical_overlap: shape mismatch with planted truth");
    double oa = result.a_hat.dot(a), ob = result.b_hat.dot(b);
    return {oa * oa, ob * ob};
}

}  // namespace twoview::spectral
