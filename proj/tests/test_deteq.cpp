#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "twoview/deteq.hpp"
#include "twoview/errors.hpp"
#include "twoview/spectral.hpp"
#include "twoview/theory.hpp"

using namespace twoview;
using deteq::Complex;

namespace {
const LimitModel kCca = LimitModel::cca(2, 2);
const LimitModel kWig = LimitModel::cswig(0.8, 0.8);
const LimitModel kWish = LimitModel::cswish(0.6, 0.6, 2.0);
}  // namespace

TEST_CASE("Wigner edge identities at z = 1 + 1e-6") {
    deteq::DetSolution sol = deteq::solve_system(kWig, Complex(1.0 + 1e-6, 0.0));
    CHECK((sol.T + deteq::Mat2c::Identity()).cwiseAbs().maxCoeff() <= 1e-2);
    CHECK(std::abs(sol.r.real() + 1.0) <= 1e-2);
    CHECK(std::abs(sol.s.real() + 1.0) <= 1e-2);
    CHECK(sol.residual <= 1e-11);
}

TEST_CASE("Wishart edge identities at z = 1 + 1e-6") {
    deteq::DetSolution sol = deteq::solve_system(kWish, Complex(1.0 + 1e-6, 0.0));
    CHECK(std::abs(sol.r.real() + 1.6) <= 1e-2);
    CHECK(std::abs(sol.s.real() + 1.6) <= 1e-2);
    CHECK((sol.T + deteq::Mat2c::Identity()).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("CCA edge identities at z = lambda_* + 1e-6") {
    double lstar = deteq::edge(kCca);
    deteq::DetSolution sol = deteq::solve_system(kCca, Complex(lstar + 1e-6, 0.0));
    CHECK(std::abs(sol.r.real() + 1.0 / lstar) <= 1e-2);
    CHECK(std::abs(sol.s.real() + 1.0 / lstar) <= 1e-2);
    CHECK(std::abs(sol.T(0, 0).real()) <= 1e-2);
    CHECK(std::abs(sol.T(0, 1).real() + lstar) <= 1e-2);
    CHECK(std::abs(sol.T(1, 1).real()) <= 1e-2);
}

TEST_CASE("large-z asymptotics") {
    Complex z(0.0, 100.0);
    for (const LimitModel& m : {kCca, kWig}) {
        deteq::DetSolution sol = deteq::solve_system(m, z);
        CHECK(std::abs(sol.r - (-1.0 / z)) <= 10.0 / std::norm(z));
        CHECK(std::abs(sol.s - (-1.0 / z)) <= 10.0 / std::norm(z));
    }
    deteq::DetSolution wish = deteq::solve_system(kWish, z);
    CHECK(std::abs(wish.r + 1.0) <= 2.0 / std::abs(z));
}

TEST_CASE("Stieltjes transform normalization |z m(z) + 1| <= 5/|z|") {
    for (const LimitModel& m : {kCca, kWig, kWish})
        for (double r : {10.0, 50.0, 100.0}) {
            Complex z(0.0, r);
            Complex mz = deteq::stieltjes_of_w(m, z);
            CHECK(std::abs(z * mz + 1.0) <= 5.0 / std::abs(z));
        }
}

TEST_CASE("Stieltjes property on the upper half-plane") {
    for (const LimitModel& m : {kCca, kWig, kWish}) {
        for (int i = 0; i < 50; ++i) {
            double x = -3.0 + 5.0 * (i % 10) / 9.0;
            double y = 0.01 + 2.0 * (i / 10) / 4.0;
            deteq::DetSolution sol = deteq::solve_system(m, Complex(x, y));
            CHECK(sol.r.imag() > 0.0);
            CHECK(sol.s.imag() > 0.0);
            CHECK(sol.residual <= 1e-11);
        }
    }
}

TEST_CASE("negative and increasing on the real axis right of the edge") {
    for (const LimitModel& m : {kCca, kWig, kWish}) {
        double e = deteq::edge(m);
        double prev_r = -1e300, prev_s = -1e300;
        for (int i = 0; i <= 30; ++i) {
            double z = e + 1e-4 + (10.0 - 1e-4) * i / 30.0;
            deteq::DetSolution sol = deteq::solve_system(m, Complex(z, 0.0));
            CHECK(sol.r.real() < 0.0);
            CHECK(sol.s.real() < 0.0);
            CHECK(sol.r.imag() == 0.0);
            CHECK(sol.T(0, 1) == sol.T(1, 0));
            CHECK(sol.r.real() >= prev_r);
            CHECK(sol.s.real() >= prev_s);
            prev_r = sol.r.real();
            prev_s = sol.s.real();
        }
    }
}

TEST_CASE("multi-start agreement to 1e-10") {
    for (const LimitModel& m : {kCca, kWig, kWish}) {
        double e = deteq::edge(m);
        for (Complex z : {Complex(e + 0.05, 0.0), Complex(e + 1.0, 0.0), Complex(0.5, 0.7),
                          Complex(-1.0, 0.2)}) {
            deteq::MultistartReport rep = deteq::solve_multistart(m, z, 5, 99);
            CHECK(rep.max_deviation <= 1e-10);
        }
    }
}

TEST_CASE("CCA polynomial consistency") {
    double kap = theory::kappa(kCca);
    for (double off : {1e-3, 0.1, 0.5, 2.0}) {
        deteq::DetSolution sol = deteq::solve_system(kCca, Complex(deteq::edge(kCca) + off, 0.0));
        double r = sol.r.real(), s = sol.s.real(), z = sol.z.real();
        double d = 1.0 - kap * (r + s) - (1.0 - kap * kap) * r * s;
        double defect1 = (1.0 + z * r) * d + kCca.tau_m * (kap + (1.0 - kap * kap) * s) * r;
        double defect2 = (1.0 + z * s) * d + kCca.tau_k * (kap + (1.0 - kap * kap) * r) * s;
        CHECK(std::abs(defect1) <= 1e-9);
        CHECK(std::abs(defect2) <= 1e-9);
    }
}

TEST_CASE("Wigner solution satisfies the closed-form rational identities") {
    double kap = theory::kappa(kWig);
    double a2 = kWig.alpha * kWig.alpha, b2 = kWig.beta * kWig.beta;
    for (double z : {1.1, 1.7, 3.0}) {
        deteq::DetSolution sol = deteq::solve_system(kWig, Complex(z, 0.0));
        double r = sol.r.real(), s = sol.s.real();
        double c1 = a2 * (1.0 + r), c2 = b2 * (1.0 + s);
        double delta = z * z + z * (c1 + c2) + (1.0 - kap * kap) * c1 * c2;
        CHECK(r == doctest::Approx(-(z + (1.0 - kap * kap) * c2) / delta).epsilon(1e-9));
        CHECK(s == doctest::Approx(-(z + (1.0 - kap * kap) * c1) / delta).epsilon(1e-9));
    }
}

TEST_CASE("real-axis solve agrees with the eta -> 0 limit path") {
    for (const LimitModel& m : {kCca, kWig, kWish}) {
        double z = deteq::edge(m) + 0.35;
        deteq::DetSolution real_sol = deteq::solve_system(m, Complex(z, 0.0));
        deteq::DetSolution lim_sol = deteq::solve_system(m, Complex(z, 1e-7));
        CHECK(std::abs(real_sol.r - lim_sol.r) <= 1e-5);
        CHECK(std::abs(real_sol.s - lim_sol.s) <= 1e-5);
    }
}

TEST_CASE("limiting density: positivity and support") {
    for (const LimitModel& m : {kCca, kWig, kWish}) {
        double e = deteq::edge(m);
        CHECK(deteq::limiting_density(m, e + 0.2, 1e-3) <= 1e-2);
        for (double x = e - 2.0; x <= e + 1.0; x += 0.25)
            CHECK(deteq::limiting_density(m, x, 1e-3) >= 0.0);
    }
}

TEST_CASE("CCA density integrates to one") {
    // trapezoid over a sweep covering the bulk support
    double lo = -8.0, hi = deteq::edge(kCca) + 0.2;
    int pts = 700;
    double mass = 0.0, prev = deteq::limiting_density(kCca, lo, 1e-3);
    for (int i = 1; i <= pts; ++i) {
        double x = lo + (hi - lo) * i / pts;
        double cur = deteq::limiting_density(kCca, x, 1e-3);
        mass += 0.5 * (prev + cur) * (hi - lo) / pts;
        prev = cur;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("null CCA spectrum matches the limiting density (L1)") {
    // histogram of the 2000 eigenvalues of one null W draw vs the density
    TwoViewInstance inst = sample_instance(ModelParams::cca(2000, 1000, 1000, 0.0), false, 314);
    Matrix w = spectral::build_w(inst);
    Vector vals = linalg::sym_eigvalues(w);
    const int bins = 60;
    double lo = vals(vals.size() - 1) - 0.05, hi = vals(0) + 0.05;
    double width = (hi - lo) / bins;
    std::vector<double> counts(bins, 0.0);
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        int b = std::min(bins - 1, std::max(0, int((vals(i) - lo) / width)));
        counts[b] += 1.0 / (vals.size() * width);
    }
    double l1 = 0.0;
    for (int b = 0; b < bins; ++b) {
        double center = lo + (b + 0.5) * width;
        double pred = deteq::limiting_density(kCca, center, 1e-3);
        l1 += std::abs(counts[b] - pred) * width;
    }
    CHECK(l1 <= 0.08);
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(deteq::solve_system(kWig, Complex(0.5, 0.0)), DomainError);
    CHECK_THROWS_AS(deteq::solve_system(kWig, Complex(1.0 + 1e-12, 0.0)), DomainError);
    CHECK_THROWS_AS(deteq::solve_system(kWig, Complex(2.0, -0.1)), DomainError);
    CHECK_THROWS_AS(deteq::limiting_density(kWig, 0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(deteq::solve_system(LimitModel::cca(0.7, 0.7), Complex(2.0, 0.0)),
                    DomainError);  // kappa >= 1 unsupported for the CCA statistic
}
