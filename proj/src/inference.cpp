#include "twoview/inference.hpp"

#include <cmath>

#include "twoview/deteq.hpp"
#include "twoview/errors.hpp"
#include "twoview/rng.hpp"

namespace twoview::inference {

namespace {

double edge_of(const ModelParams& p) {
    if (p.kind == ModelKind::CCA) return deteq::edge(p.limit());
    return 1.0;
}

}  // namespace

DetectionResult detect(const TwoViewInstance& inst, const ThresholdRule& rule) {
    SpectralResult spec = spectral::top_eigs(inst, std::nullopt, 1);
    DetectionResult res;
    res.statistic = spec.eigenvalues(0);
    res.threshold = edge_of(inst.params) + rule.c * std::pow(inst.params.n, -1.0 / 3.0);
    res.reject_null = res.statistic >= res.threshold;
    res.argmax_guess = spec.guess_params;
    return res;
}

GridSearchResult grid_search(const TwoViewInstance& inst, double eps,
                             std::optional<double> mesh_opt, const ThresholdRule& rule) {
    const ModelParams& p = inst.params;
    if (p.kind == ModelKind::CCA)
        throw ValidationError("grid_search applies to the spiked models");
    if (!(eps > 0.0 && eps < 0.25)) throw ValidationError("grid_search: eps must lie in (0, 1/4)");
    double mesh = mesh_opt.value_or(eps * eps);
    if (!(mesh > 0.0)) throw ValidationError("grid_search: mesh must be positive");

    const double tau = p.tau();
    const double upper = 1.0 / std::sqrt(tau);
    GridSearchResult res;
    std::vector<spectral::StatCoeffs> coeffs;
    for (int i = 1; i * mesh < upper - 1e-12; ++i) {
        for (int j = 1; j * mesh < upper - 1e-12; ++j) {
            Guess g{i * mesh, j * mesh};
            LimitModel gm = p.kind == ModelKind::CSWig
                                ? LimitModel::cswig(g.first, g.second)
                                : LimitModel::cswish(g.first, g.second, tau);
            double kap = theory::kappa(gm);
            if (!(kap > 0.0 && kap < 1.0)) continue;
            res.grid.push_back(g);
            coeffs.push_back(spectral::stat_coeffs(p.kind, tau, g));
        }
    }
    if (res.grid.empty())
        throw ValidationError("grid_search: admissible grid is empty at this mesh");

    spectral::SpikedGram gram = spectral::make_spiked_gram(inst);

    const int dim = 2 * gram.half;
    auto apply_batch = [&](const Matrix& x, const std::vector<int>& ids, Matrix& y) {
        // same GEMM structure as spectral::apply_h but with per-column
        // coefficients so every chain shares the two big products
        const int h = gram.half;
        const int cols = static_cast<int>(x.cols());
        Matrix xs(h, cols), ys(h, cols);
        for (int j = 0; j < cols; ++j) {
            const auto& c = coeffs[ids[j]];
            xs.col(j).noalias() = c.u * x.col(j).head(h) + c.v * x.col(j).tail(h);
            ys.col(j).noalias() = c.v * x.col(j).head(h) + c.u * x.col(j).tail(h);
        }
        Matrix ux = (*gram.su) * xs;
        Matrix vy = (*gram.sv) * ys;
        y.resize(dim, cols);
        for (int j = 0; j < cols; ++j) {
            const auto& c = coeffs[ids[j]];
            Vector bu = c.a_lin * ux.col(j) - c.a_shift * xs.col(j);
            Vector bv = c.b_lin * vy.col(j) - c.b_shift * ys.col(j);
            y.col(j).head(h) = c.u * bu + c.v * bv;
            y.col(j).tail(h) = c.v * bu + c.u * bv;
        }
    };

    linalg::LanczosOptions opts;
    opts.max_iter = std::min(dim, 400);
    linalg::BatchedLanczosResult batched =
        linalg::lanczos_top1_batched(apply_batch, dim, static_cast<int>(res.grid.size()), opts);
    res.lambda1 = batched.values;

    // argmax by value, ties to the lexicographically first grid point
    size_t best = 0;
    for (size_t i = 1; i < res.lambda1.size(); ++i)
        if (res.lambda1[i] > res.lambda1[best]) best = i;

    res.spectral = spectral::top_eigs(inst, res.grid[best], 2);
    res.detection.statistic = res.lambda1[best];
    res.detection.threshold = 1.0 + rule.c * std::pow(p.n, -1.0 / 3.0);
    res.detection.reject_null = res.detection.statistic >= res.detection.threshold;
    res.detection.argmax_guess = res.grid[best];
    return res;
}

double wigner_strength_from(const Vector& x, const Matrix& u2, double eta) {
    Vector ux = u2 * x;
    double denom = x.dot(ux);
    // a denominator below the n^{-9/20} error resolution is indistinguishable
    // from zero: degenerate recovery, estimate 0
    if (std::abs(denom) < std::pow(static_cast<double>(x.size()), -0.45)) return 0.0;
    return std::sqrt(1.0 + 1.0 / eta) * (ux.squaredNorm() - 1.0) / denom;
}

double wishart_strength_from(const Vector& x, const Matrix& u2, double tau_n, double eta) {
    Vector sx = u2.transpose() * (u2 * x);  // S_U x with S_U = U2^T U2
    Vector tx = sx - tau_n * x;
    double a = x.dot(tx);
    double n = tau_n * static_cast<double>(x.size());
    if (std::abs(a) < std::pow(n, -0.45)) return 0.0;
    double b = tx.squaredNorm() - tau_n;
    return (1.0 + 1.0 / eta) / tau_n * (b / a - 1.0);
}

namespace {

Matrix fresh_goe(std::uint64_t seed, std::string_view tag, int n) {
    rng::Stream st(rng::derive_key(seed, tag));
    Matrix z(n, n);
    double off = 1.0 / std::sqrt(static_cast<double>(n));
    double diag = std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
        z(i, i) = diag * st.normal();
        for (int j = i + 1; j < n; ++j) {
            double x = off * st.normal();
            z(i, j) = x;
            z(j, i) = x;
        }
    }
    return z;
}

Matrix fresh_gaussian(std::uint64_t seed, std::string_view tag, int rows, int cols,
                      double sigma) {
    rng::Stream st(rng::derive_key(seed, tag));
    Matrix z(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) z(i, j) = sigma * st.normal();
    return z;
}

}  // namespace

NoiseSplit split_views(const TwoViewInstance& inst, std::uint64_t aux_seed) {
    const ModelParams& p = inst.params;
    if (p.kind == ModelKind::CCA)
        throw ValidationError("split_views applies to the spiked models");
    NoiseSplit split;
    split.eta = std::pow(static_cast<double>(p.n), -0.2);
    const double eta = split.eta;

    Matrix gu, gv;
    if (p.kind == ModelKind::CSWig) {
        gu = fresh_goe(aux_seed, "split.GU", p.n);
        gv = fresh_goe(aux_seed, "split.GV", p.n);
    } else {
        double sigma = 1.0 / std::sqrt(static_cast<double>(p.m));
        gu = fresh_gaussian(aux_seed, "split.GU", p.n, p.m, sigma);
        gv = fresh_gaussian(aux_seed, "split.GV", p.n, p.m, sigma);
    }

    double c1 = 1.0 / std::sqrt(1.0 + eta), c2 = 1.0 / std::sqrt(1.0 + 1.0 / eta);
    split.u1 = c1 * (inst.U + std::sqrt(eta) * gu);
    split.v1 = c1 * (inst.V + std::sqrt(eta) * gv);
    split.u2 = c2 * (inst.U - gu / std::sqrt(eta));
    split.v2 = c2 * (inst.V - gv / std::sqrt(eta));
    return split;
}

StrengthEstimate estimate_strengths(const TwoViewInstance& inst, std::uint64_t aux_seed,
                                    const StrengthOptions& opts) {
    const ModelParams& p = inst.params;
    if (p.kind == ModelKind::CCA)
        throw ValidationError("estimate_strengths applies to the spiked models");

    StrengthEstimate est;
    est.aux_seed = aux_seed;
    est.eta = std::pow(static_cast<double>(p.n), -0.2);
    const double eta = est.eta;

    NoiseSplit split = split_views(inst, aux_seed);
    TwoViewInstance first;
    first.params = p;
    first.seed = inst.seed;
    first.planted = inst.planted;
    first.U = std::move(split.u1);
    first.V = std::move(split.v1);
    const Matrix& u2 = split.u2;
    const Matrix& v2 = split.v2;

    GridSearchResult rec = grid_search(first, opts.eps, opts.mesh);
    double na = rec.spectral.a_hat.norm(), nb = rec.spectral.b_hat.norm();
    if (na < 1e-12 || nb < 1e-12) return est;  // degenerate recovery, estimates stay 0

    Vector x = rec.spectral.a_hat / na;
    Vector y = rec.spectral.b_hat / nb;
    if (p.kind == ModelKind::CSWig) {
        est.alpha_hat = wigner_strength_from(x, u2, eta);
        est.beta_hat = wigner_strength_from(y, v2, eta);
    } else {
        double tau_n = p.tau();
        est.alpha_hat = wishart_strength_from(x, u2, tau_n, eta);
        est.beta_hat = wishart_strength_from(y, v2, tau_n, eta);
    }
    return est;
}

}  // namespace twoview::inference
