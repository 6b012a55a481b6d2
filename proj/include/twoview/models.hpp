#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "twoview/linalg.hpp"

namespace twoview {

using linalg::Matrix;
using linalg::Vector;

enum class ModelKind { CCA, CSWig, CSWish };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Asymptotic description consumed by the deterministic-equivalent, outlier
// and threshold modules: only the aspect ratios and signal strengths matter
// there, not the finite dimensions.
struct LimitModel {
    ModelKind kind = ModelKind::CCA;
    double tau_m = 2.0, tau_k = 2.0;      // CCA: n/m, n/k
    double alpha = 0.0, beta = 0.0;       // spiked signal strengths
    double tau = 1.0;                     // CSWish: n/m (1 for CSWig)

    static LimitModel cca(double tau_m, double tau_k);
    static LimitModel cswig(double alpha, double beta);
    static LimitModel cswish(double alpha, double beta, double tau);
};

struct ModelParams {
    ModelKind kind = ModelKind::CCA;
    int n = 0;            // samples (CCA) / matrix dimension (CSWig) / rows (CSWish)
    int m = 0;            // CCA first-view dimension; CSWish columns
    int k = 0;            // CCA second-view dimension
    double alpha = 0.0;   // spiked models
    double beta = 0.0;
    double rho = 0.0;

    static ModelParams cca(int n, int m, int k, double rho);
    static ModelParams cswig(int n, double alpha, double beta, double rho);
    static ModelParams cswish(int n, int m, double alpha, double beta, double rho);

    void validate() const;  // throws ValidationError on inadmissible parameters

    double tau_m() const { return static_cast<double>(n) / m; }
    double tau_k() const { return static_cast<double>(n) / k; }
    double tau() const { return kind == ModelKind::CSWig ? 1.0 : static_cast<double>(n) / m; }

    // Limit description at the observed finite-n ratios.
    LimitModel limit() const;
};

struct PlantedTruth {
    Vector a, b;  // hidden directions
    Vector u, v;  // latent factors (CSWish only; size 0 otherwise)
};

struct TwoViewInstance {
    ModelParams params;
    Matrix U, V;
    std::optional<PlantedTruth> planted;
    std::uint64_t seed = 0;
};

// Seed-deterministic sampling: identical (params, planted, seed) gives a
// bit-identical instance on every run and under any thread schedule. With
// planted=false this draws from the null model Q of each family.
TwoViewInstance sample_instance(const ModelParams& params, bool planted, std::uint64_t seed);

// Row-major CSV dump with a "rows,cols" header line.
void save_matrix_csv(const std::string& path, const Matrix& m);
Matrix load_matrix_csv(const std::string& path);

}  // namespace twoview
