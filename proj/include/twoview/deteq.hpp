#pragma once

#include <complex>

#include "twoview/models.hpp"

namespace twoview::deteq {

using Complex = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;

// Solution of the model's coupled self-consistent system at one spectral
// point. On the upper half-plane r,s are Stieltjes transforms (Im > 0); on
// the real axis right of the bulk edge they are real and negative and T is
// real symmetric.
struct DetSolution {
    Complex z;
    Complex r, s;
    Mat2c T;
    LimitModel model;
    double kappa = 0.0;
    double residual = 0.0;  // max defect of the defining equations
    int iterations = 0;
};

// Right edge of the null bulk (lambda_* for CCA, 1 for the spiked models).
double edge(const LimitModel& model);

// Solve the coupled system at z with Im z > 0 or real z > edge + 1e-9.
// Damped fixed-point iteration with geometric path continuation from the
// large-|z| regime, Newton-polished; throws DomainError off the admissible
// set and NumericalError (with last iterate and residual) on non-convergence.
DetSolution solve_system(const LimitModel& model, Complex z);

struct MultistartReport {
    DetSolution solution;
    double max_deviation = 0.0;  // max pairwise |difference| across starts
    int starts = 0;
};

// Re-solves from `starts` random admissible initializations (no
// continuation) and reports the worst pairwise disagreement; exercises the
// uniqueness guarantee of the coupled system.
MultistartReport solve_multistart(const LimitModel& model, Complex z, int starts = 5,
                                  std::uint64_t seed = 12345);

// Limiting Stieltjes transform of the spectral law of W:
// (tau_k r + tau_m s)/(tau_k + tau_m) for CCA, Tr T / 2 for spiked models.
Complex stieltjes_of_w(const LimitModel& model, Complex z);

// Stieltjes inversion at smoothing eta in (0, 0.1]:
// Im stieltjes_of_w(x + i eta) / pi.
double limiting_density(const LimitModel& model, double x, double eta);

}  // namespace twoview::deteq
