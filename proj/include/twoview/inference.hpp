#pragma once

#include <optional>
#include <vector>

#include "twoview/spectral.hpp"

namespace twoview::inference {

using spectral::SpectralResult;
using theory::Guess;

struct ThresholdRule {
    double c = 4.0;  // reject when statistic >= edge + c * n^{-1/3}
};

struct DetectionResult {
    double statistic = 0.0;  // lambda_1(W) or Lambda_eps
    double threshold = 0.0;
    bool reject_null = false;
    std::optional<Guess> argmax_guess;
};

// lambda_1(W) against edge + c n^{-1/3}. The spiked statistic uses the
// matched parameters carried by the instance; CCA needs none.
DetectionResult detect(const TwoViewInstance& inst, const ThresholdRule& rule = {});

struct GridSearchResult {
    DetectionResult detection;
    SpectralResult spectral;            // at the argmax grid point
    std::vector<Guess> grid;            // admissible points, lexicographic
    std::vector<double> lambda1;        // per grid point
};

// Parameter-free statistic Lambda_eps = max over the admissible grid
// {(a~,b~) in mesh*Z cap (0, tau^{-1/2}) : kappa(a~,b~,tau) < 1} of
// lambda_1(W(a~,b~)). mesh defaults to eps^2; eps^9 is available for the
// full-fidelity grid. Deterministic for any thread count.
GridSearchResult grid_search(const TwoViewInstance& inst, double eps,
                             std::optional<double> mesh = std::nullopt,
                             const ThresholdRule& rule = {});

struct StrengthEstimate {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double eta = 0.0;  // n^{-1/5} exactly
    std::uint64_t aux_seed = 0;
};

struct StrengthOptions {
    double eps = 0.1;
    double mesh = 0.1;  // recovery runs over a 10x10 candidate grid by default
};

// The two halves of the noise split used by the strength estimators: fresh
// noise G keyed by aux_seed, U1 = (U + sqrt(eta) G)/sqrt(1+eta) and
// U2 = (U - G/sqrt(eta))/sqrt(1+1/eta), so the noise parts of (U1, U2) are
// independent with the original marginals.
struct NoiseSplit {
    Matrix u1, v1, u2, v2;
    double eta = 0.0;
};
NoiseSplit split_views(const TwoViewInstance& inst, std::uint64_t aux_seed);

// Noise-split estimators of the signal strengths: grid-search recovery on
// the first split feeds the quadratic-form estimator evaluated on the second.
StrengthEstimate estimate_strengths(const TwoViewInstance& inst, std::uint64_t aux_seed,
                                    const StrengthOptions& opts = {});

// Estimator cores, exposed for direct evaluation on a given recovery
// direction. Both return 0 when the denominator is degenerate (below
// machine-level noise), the convention for failed recovery.
double wigner_strength_from(const Vector& x, const Matrix& u2, double eta);
double wishart_strength_from(const Vector& x, const Matrix& u2, double tau_n, double eta);

}  // namespace twoview::inference
