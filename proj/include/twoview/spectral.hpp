#pragma once

#include <optional>
#include <utility>

#include "twoview/models.hpp"
#include "twoview/theory.hpp"

namespace twoview::spectral {

using theory::Guess;

struct SpectralResult {
    Vector eigenvalues;  // top-k, descending
    Vector a_hat, b_hat; // split of the top unit eigenvector, |a|^2+|b|^2 = 1
    std::optional<Guess> guess_params;
};

// The spectral statistic W. CCA infers kappa from the observed shapes and
// ignores guess; the spiked models build W(alpha~, beta~) from guess
// (defaulting to the instance's true parameters).
Matrix build_w(const TwoViewInstance& inst, std::optional<Guess> guess = std::nullopt);

// Eigenvalues of W via the symmetric conjugate H = (A^{1/2} (x) I) diag(Ubar,
// Vbar) (A^{1/2} (x) I) for the spiked models (W itself for CCA), plus the
// top right-eigenvector of W mapped back through A^{1/2} and split at
// split_at (defaults to half).
SpectralResult symmetrize_and_eig(const Matrix& w, ModelKind kind, double kappa, int k,
                                  int split_at = -1);

// End-to-end: statistic, top-k eigenvalues and split eigenvector for an
// instance. Dispatches to a dense or operator-form Krylov path by size.
SpectralResult top_eigs(const TwoViewInstance& inst, std::optional<Guess> guess = std::nullopt,
                        int k = 2);

// (<a_hat, a>^2, <b_hat, b>^2) against the planted directions (normalized to
// unit length). Throws ValidationError on null instances.
std::pair<double, double> empirical_overlap(const SpectralResult& result,
                                            const TwoViewInstance& inst);

// --- operator form of the spiked statistic, shared by the grid search ------

// Normalized-block coefficients: Ubar = a_lin*SU - a_shift*I with SU = U
// (CSWig) or U^T U (CSWish); u,v are the entries of A^{1/2} for kappa~.
struct StatCoeffs {
    double a_lin = 0, a_shift = 0, b_lin = 0, b_shift = 0;
    double kappa = 0, u = 0, v = 0;
};
StatCoeffs stat_coeffs(ModelKind kind, double tau, const Guess& g);

// Guess-independent heavy factor reused across grid points.
struct SpikedGram {
    Matrix su_store, sv_store;
    const Matrix* su = nullptr;
    const Matrix* sv = nullptr;
    int half = 0;
};
SpikedGram make_spiked_gram(const TwoViewInstance& inst);

// Y = H X columnwise for the symmetrized statistic of one coefficient set.
void apply_h(const SpikedGram& g, const StatCoeffs& c, const Matrix& x, Matrix& y);

}  // namespace twoview::spectral
