#pragma once

#include <optional>

#include "twoview/deteq.hpp"
#include "twoview/theory.hpp"

namespace twoview::outlier {

using theory::Guess;
using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

struct OutlierPrediction {
    bool exists = false;
    double lambda_out = 0.0;     // valid iff exists
    Vec2 kernel_vector;          // unit vector in ker S(lambda_out)
    Mat2 ds_dz;                  // d S / d z at lambda_out
    double overlap_a = 0.0;      // predicted |<a_hat,a>|^2 (CCA exact,
    double overlap_b = 0.0;      //   spiked models: lower bounds)
    bool is_lower_bound = false;
    double edge_det = 0.0;       // det S at the edge limit
    double threshold = 0.0;      // kappa (matched) or rho_out (mismatched)
};

// Limiting 2x2 matrix S(z) at real z > edge. For the spiked models `guess`
// selects the (alpha~, beta~) used to build the spectral statistic; the true
// strengths in `model` enter the perturbation amplitudes. CCA ignores guess.
Mat2 build_s(const LimitModel& model, double rho, double z,
             std::optional<Guess> guess = std::nullopt);

// S at the edge limit z -> edge+, via sqrt-scale Richardson extrapolation
// from probes at edge + delta*{1,4,16}.
Mat2 s_at_edge(const LimitModel& model, double rho, std::optional<Guess> guess = std::nullopt,
               double delta = 1e-6);

// dS/dz by central differences with h = 1e-6*max(1,|z|), Richardson-
// extrapolated once.
Mat2 ds_dz(const LimitModel& model, double rho, double z,
           std::optional<Guess> guess = std::nullopt);

// Locates lambda_out as the unique root of det S on (edge, edge+50] by
// bracketing the crossing eigenvalue (largest for CCA, smallest for spiked)
// and Brent's method, then evaluates the overlap predictions.
OutlierPrediction find_outlier(const LimitModel& model, double rho,
                               std::optional<Guess> guess = std::nullopt);

}  // namespace twoview::outlier
