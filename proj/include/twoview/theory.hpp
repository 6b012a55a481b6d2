#pragma once

#include <optional>
#include <utility>

#include "twoview/models.hpp"

namespace twoview::theory {

using Guess = std::pair<double, double>;  // (alpha~, beta~)

// Critical correlation threshold: (tau_m tau_k)^{-1/4} for CCA,
// ((1-tau a^2)(1-tau b^2) / (tau^2 a^2 b^2))^{1/4} for the spiked models.
double kappa(const LimitModel& model);

// Right edge of the null bulk: (1-kappa^2)/kappa for CCA, 1 for spiked.
double lambda_star(const LimitModel& model);

enum class Regime { Below, At, Above };

struct ThresholdReport {
    double kappa = 0.0;
    double lambda_star = 0.0;
    Regime regime = Regime::Below;
    std::optional<double> rho_out_mismatched;
};

ThresholdReport threshold_report(const LimitModel& model, double rho,
                                 std::optional<Guess> guess = std::nullopt);

// Mismatched outlier threshold rho_out(guess; truth) for the spiked models.
double rho_out(const Guess& guess, const Guess& truth, double tau, ModelKind kind);

// Saddle exponent of the CCA chi^2 second moment:
// Psi_n(s,t) = -log(1-rho^2 st) + (m-3)/(2n) log(1-s^2) + (k-3)/(2n) log(1-t^2)
double saddle_exponent(double s, double t, double rho, int n, int m, int k);

// log of the sphere-overlap density constant c_m with
// f_m(s) = c_m (1-s^2)^{(m-3)/2} on [-1,1]
double log_overlap_const(int m);

// E[(1-rho^2 theta phi)^{-n}] under independent sphere overlaps, evaluated by
// adaptive 2D quadrature. Refuses rho >= kappa (divergent regime).
double chi2_second_moment(double rho, int n, int m, int k, double rel_tol = 1e-6);

// Closed-form second-moment positivity margin for the spiked models:
// (1-tau a^2)(1-tau b^2) - tau^2 a^2 b^2 rho^4, positive iff rho < kappa.
double second_moment_condition(const LimitModel& model, double rho);

}  // namespace twoview::theory
