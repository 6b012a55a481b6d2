#include "twoview/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "twoview/errors.hpp"
#include "twoview/rng.hpp"

namespace twoview::linalg {

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    return worst <= tol * scale;
}

namespace {

// Largest-magnitude coordinate made positive; first index wins on ties.
void fix_signs(Matrix& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index imax = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            double a = std::abs(vectors(i, c));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (vectors(imax, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

constexpr int kFullDecompositionLimit = 4096;

}  // namespace

EigenPairs sym_eig(const Matrix& m, int k) {
    if (m.rows() != m.cols()) throw ValidationError("sym_eig: matrix not square");
    const int n = static_cast<int>(m.rows());
    if (k < 1 || k > n) throw ValidationError("sym_eig: k out of range");
    if (!is_symmetric(m)) throw ValidationError("sym_eig: matrix not symmetric");

    if (n > kFullDecompositionLimit) {
        // Krylov path, residual-certified under the same contract.
        LanczosOptions opts;
        opts.resid_tol = 1e-9;
        opts.max_iter = std::min(n, 1500);
        auto apply = [&m](const Vector& x, Vector& y) { y.noalias() = m.selfadjointView<Eigen::Lower>() * x; };
        LanczosResult res = lanczos_topk(apply, n, k, opts);
        double scale = m.norm() + res.values.cwiseAbs().maxCoeff();
        for (int i = 0; i < k; ++i)
            if (res.residuals(i) > 1e-8 * scale)
                throw NumericalError("sym_eig: Krylov iteration did not certify residual " +
                                     std::to_string(res.residuals(i)) + " at scale " + std::to_string(scale));
        EigenPairs out{res.values, res.vectors};
        fix_signs(out.vectors);
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalError("sym_eig: decomposition did not converge within iteration cap");

    EigenPairs out;
    out.values = Vector(k);
    out.vectors = Matrix(n, k);
    for (int i = 0; i < k; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);  // ascending -> descending
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    fix_signs(out.vectors);
    return out;
}

Vector sym_eigvalues(const Matrix& m) {
    if (!is_symmetric(m)) throw ValidationError("sym_eigvalues: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("sym_eigvalues: decomposition did not converge");
    return es.eigenvalues().reverse();
}

// ---------------------------------------------------------------------------
// Lanczos

namespace {

Vector deterministic_start(int dim, std::uint64_t seed) {
    rng::Stream st(rng::derive_key(seed, "lanczos-start"));
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = st.normal();
    v /= v.norm();
    return v;
}

struct TridEig {
    Vector values;   // descending
    Matrix vectors;  // of the tridiagonal
};

TridEig trid_eig(const std::vector<double>& alpha, const std::vector<double>& beta, int j,
                 bool want_vectors) {
    Matrix t = Matrix::Zero(j, j);
    for (int i = 0; i < j; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < j) t(i, i + 1) = t(i + 1, i) = beta[i + 1];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(t, want_vectors ? Eigen::ComputeEigenvectors
                                                             : Eigen::EigenvaluesOnly);
    TridEig out;
    out.values = es.eigenvalues().reverse();
    if (want_vectors) out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

}  // namespace

LanczosResult lanczos_topk(const std::function<void(const Vector&, Vector&)>& apply, int dim,
                           int k, const LanczosOptions& opts) {
    if (k < 1 || k > dim) throw ValidationError("lanczos_topk: k out of range");
    const int maxit = std::min(opts.max_iter, dim);

    Matrix basis(dim, maxit);
    std::vector<double> alpha, beta{0.0};
    basis.col(0) = deterministic_start(dim, opts.start_seed);

    Vector w(dim);
    Vector prev_vals = Vector::Constant(k, -1e300);
    int stall = 0;
    int j = 0;
    bool exhausted = false;

    for (; j < maxit; ++j) {
        apply(basis.col(j), w);
        double a = basis.col(j).dot(w);
        alpha.push_back(a);
        w -= a * basis.col(j);
        if (j > 0) w -= beta[j] * basis.col(j - 1);
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass) {
            Vector coeffs = basis.leftCols(j + 1).transpose() * w;
            w.noalias() -= basis.leftCols(j + 1) * coeffs;
        }
        double b = w.norm();

        // Gershgorin bound on the tridiagonal as an operator-norm estimate
        double scale = 1e-30;
        for (size_t i = 0; i < alpha.size(); ++i) {
            double right = (i + 1 < alpha.size()) ? beta[i + 1] : b;
            scale = std::max(scale, std::abs(alpha[i]) + beta[i] + right);
        }

        if (b <= 1e-14 * scale) {  // invariant subspace: Ritz pairs are exact
            exhausted = true;
            ++j;
            break;
        }
        beta.push_back(b);
        if (j + 1 < maxit) basis.col(j + 1) = w / b;

        if (j + 1 >= k && (j % 5 == 4 || j + 1 == maxit)) {
            TridEig te = trid_eig(alpha, beta, j + 1, false);
            Vector vals = te.values.head(k);
            double move = (vals - prev_vals).cwiseAbs().maxCoeff();
            prev_vals = vals;
            if (move < opts.value_tol * scale) {
                if (++stall * 5 >= opts.stall_window) {
                    ++j;
                    break;
                }
            } else {
                stall = 0;
            }
        }
    }

    const int m = static_cast<int>(alpha.size());
    if (m < k) throw NumericalError("lanczos_topk: Krylov space exhausted before k pairs");
    TridEig te = trid_eig(alpha, beta, m, true);

    LanczosResult res;
    res.values = te.values.head(k);
    res.vectors = basis.leftCols(m) * te.vectors.leftCols(k);
    for (int i = 0; i < k; ++i) res.vectors.col(i) /= res.vectors.col(i).norm();
    res.residuals = Vector(k);
    double bl = exhausted ? 0.0 : beta[m];
    for (int i = 0; i < k; ++i) res.residuals(i) = std::abs(bl * te.vectors(m - 1, i));
    res.iterations = m;

    double scale = res.values.cwiseAbs().maxCoeff() + std::abs(te.values(m - 1));
    bool certified = true;
    for (int i = 0; i < k; ++i) certified = certified && res.residuals(i) <= opts.resid_tol * scale;
    res.converged = certified || exhausted || stall * 5 >= opts.stall_window;
    if (!res.converged && m >= maxit)
        throw NumericalError("lanczos_topk: no convergence after iteration cap " +
                             std::to_string(maxit));
    return res;
}

// Batched chains share each apply as one blocked product; no
// reorthogonalization (only the extreme Ritz value is consumed, which plain
// Lanczos estimates reliably). Vectors per chain come from a short second
// recurrence pass using the converged tridiagonal coefficients.
BatchedLanczosResult lanczos_top1_batched(
    const std::function<void(const Matrix&, const std::vector<int>&, Matrix&)>& apply_batch,
    int dim, int chains, const LanczosOptions& opts) {
    const int maxit = std::min(opts.max_iter, dim);
    Vector start = deterministic_start(dim, opts.start_seed);

    Matrix cur(dim, chains), prev = Matrix::Zero(dim, chains), y(dim, chains);
    for (int c = 0; c < chains; ++c) cur.col(c) = start;
    std::vector<std::vector<double>> alpha(chains), beta(chains, std::vector<double>{0.0});
    std::vector<int> active(chains);
    for (int c = 0; c < chains; ++c) active[c] = c;
    std::vector<double> theta(chains, -1e300), theta_prev(chains, -1e300);
    std::vector<int> stall(chains, 0), iters(chains, 0);

    for (int it = 0; it < maxit && !active.empty(); ++it) {
        Matrix xa(dim, active.size());
        for (size_t i = 0; i < active.size(); ++i) xa.col(i) = cur.col(active[i]);
        y.resize(dim, active.size());
        apply_batch(xa, active, y);

        std::vector<int> still;
        for (size_t i = 0; i < active.size(); ++i) {
            int c = active[i];
            Vector w = y.col(i);
            double a = xa.col(i).dot(w);
            alpha[c].push_back(a);
            w -= a * xa.col(i) + beta[c].back() * prev.col(c);
            double b = w.norm();
            iters[c] = it + 1;

            double scale = std::max(std::abs(a) + 2.0 * b, 1e-30);
            bool done = false;
            if (b <= 1e-14 * scale) {
                done = true;  // exact invariant subspace
            } else {
                beta[c].push_back(b);
                prev.col(c) = xa.col(i);
                cur.col(c) = w / b;
            }

            int m = static_cast<int>(alpha[c].size());
            if (!done && (it % 5 == 4 || it + 1 == maxit)) {
                theta[c] = trid_eig(alpha[c], beta[c], m, false).values(0);
                double move = theta[c] - theta_prev[c];
                theta_prev[c] = theta[c];
                if (std::abs(move) < opts.value_tol * std::max(std::abs(theta[c]), 1.0)) {
                    if (++stall[c] * 5 >= opts.stall_window) done = true;
                } else {
                    stall[c] = 0;
                }
            }
            if (!done) still.push_back(c);
        }
        active = still;
    }

    BatchedLanczosResult res;
    res.values.resize(chains);
    res.iterations = iters;
    for (int c = 0; c < chains; ++c) {
        int m = static_cast<int>(alpha[c].size());
        res.values[c] = trid_eig(alpha[c], beta[c], m, false).values(0);
    }
    return res;
}

}  // namespace twoview::linalg
