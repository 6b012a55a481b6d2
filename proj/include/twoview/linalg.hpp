#pragma once

#include <Eigen/Dense>
#include <functional>

namespace twoview::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Eigenvalues sorted descending, eigenvector columns matching. Ties are
// broken by construction order of the underlying decomposition; each vector's
// sign is fixed so its largest-magnitude coordinate is positive.
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

constexpr double kSymTol = 1e-12;

// max |M_ij - M_ji| relative to max |M_ij|
bool is_symmetric(const Matrix& m, double tol = kSymTol);

// k largest eigenpairs of a symmetric matrix. Full Householder
// tridiagonalization + implicit-shift decomposition; deterministic for
// identical input. Throws ValidationError on non-symmetric input.
EigenPairs sym_eig(const Matrix& m, int k);

// All eigenvalues (descending), no eigenvectors. Cheaper than sym_eig for
// spectrum histograms.
Vector sym_eigvalues(const Matrix& m);

// ---------------------------------------------------------------------------
// Iterative top-k path (Krylov), used where instances are large and only the
// leading eigenpairs are needed. apply must be the action of a symmetric
// operator.

struct LanczosOptions {
    int max_iter = 600;
    // declare a Ritz pair converged when its residual bound drops below
    // resid_tol * scale, scale = |theta| + operator-norm estimate
    double resid_tol = 1e-10;
    // alternatively stop when the top-k values move less than value_tol *
    // scale over `stall_window` consecutive iterations
    double value_tol = 1e-9;
    int stall_window = 10;
    std::uint64_t start_seed = 0x1f2e3d4c5b6a7988ULL;
};

struct LanczosResult {
    Vector values;     // descending, size k
    Matrix vectors;    // dim x k, orthonormal
    Vector residuals;  // residual bound per pair
    int iterations = 0;
    bool converged = false;
};

LanczosResult lanczos_topk(const std::function<void(const Vector&, Vector&)>& apply,
                           int dim, int k, const LanczosOptions& opts = {});

// Runs many independent Lanczos chains in lockstep so the operator can batch
// the expensive applies into matrix-matrix products. apply_batch receives the
// current block X (dim x active) together with the chain index of each
// column, and writes A_c * X.col(j) into Y.col(j). Only the top Ritz value
// per chain is returned; rerun lanczos_topk on a single chain when its
// eigenvector is needed.
struct BatchedLanczosResult {
    std::vector<double> values;
    std::vector<int> iterations;
};

BatchedLanczosResult lanczos_top1_batched(
    const std::function<void(const Matrix&, const std::vector<int>&, Matrix&)>& apply_batch,
    int dim, int chains, const LanczosOptions& opts = {});

}  // namespace twoview::linalg
