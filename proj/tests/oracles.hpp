#pragma once

// Test-only oracles, kept independent of the library's solver paths.

#include <algorithm>
#include <cmath>
#include <vector>

#include "twoview/linalg.hpp"
#include "twoview/rng.hpp"

namespace oracles {

using twoview::linalg::Matrix;
using twoview::linalg::Vector;

// Characteristic polynomial coefficients from power sums via Newton's
// identities: q(x) = sum_j (-1)^j e_j x^{n-j}.
inline std::vector<double> charpoly_coeffs(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<double> p(n + 1, 0.0);  // power sums p[j] = Tr(M^j)
    Matrix acc = Matrix::Identity(n, n);
    for (int j = 1; j <= n; ++j) {
        acc = (acc * m).eval();
        p[j] = acc.trace();
    }
    std::vector<double> e(n + 1, 0.0);
    e[0] = 1.0;
    for (int j = 1; j <= n; ++j) {
        double s = 0.0;
        for (int i = 1; i <= j; ++i) s += (i % 2 == 1 ? 1.0 : -1.0) * e[j - i] * p[i];
        e[j] = s / j;
    }
    return e;
}

inline double charpoly_eval(const std::vector<double>& e, double x) {
    const int n = static_cast<int>(e.size()) - 1;
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) acc = acc * x + (j % 2 == 0 ? e[j] : -e[j]);
    return acc;
}

// All real roots of the characteristic polynomial by sign-scan + bisection.
// Valid for symmetric matrices with (numerically) simple spectra.
inline std::vector<double> charpoly_roots(const Matrix& m) {
    std::vector<double> e = charpoly_coeffs(m);
    double bound = 1e-12;
    for (Eigen::Index i = 0; i < m.rows(); ++i) bound = std::max(bound, m.row(i).cwiseAbs().sum());
    bound += 1.0;
    const int grid = 200000;
    std::vector<double> roots;
    double x0 = -bound, f0 = charpoly_eval(e, x0);
    for (int g = 1; g <= grid; ++g) {
        double x1 = -bound + 2.0 * bound * g / grid;
        double f1 = charpoly_eval(e, x1);
        if ((f0 < 0.0) != (f1 < 0.0)) {
            double a = x0, b = x1, fa = f0;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b), fm = charpoly_eval(e, mid);
                if ((fa < 0.0) != (fm < 0.0))
                    b = mid;
                else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    std::sort(roots.begin(), roots.end(), std::greater<double>());
    return roots;
}

inline Matrix random_symmetric(int n, std::uint64_t seed) {
    twoview::rng::Stream st(seed, "oracle.sym");
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double x = st.normal();
            m(i, j) = x;
            m(j, i) = x;
        }
    return m;
}

// Marsaglia-Tsang gamma sampler (shape >= 1) on top of the project RNG.
inline double gamma_sample(twoview::rng::Stream& st, double shape) {
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = st.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = st.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// overlap <a1,a2> of two independent uniform sphere points in R^m:
// theta = g / sqrt(g^2 + chi2_{m-1})
inline double sphere_overlap_sample(twoview::rng::Stream& st, int m) {
    double g = st.normal();
    double chi2 = 2.0 * gamma_sample(st, (m - 1) / 2.0);
    return g / std::sqrt(g * g + chi2);
}

struct MeanSe {
    double mean = 0.0, se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe r;
    for (double x : xs) r.mean += x;
    r.mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - r.mean) * (x - r.mean);
    var /= (xs.size() - 1);
    r.se = std::sqrt(var / xs.size());
    return r;
}

}  // namespace oracles
