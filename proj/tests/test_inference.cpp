#include <doctest.h>

#include <cmath>

#include "twoview/deteq.hpp"
#include "twoview/errors.hpp"
#include "twoview/inference.hpp"
#include "twoview/rng.hpp"

using namespace twoview;
using theory::Guess;

TEST_CASE("grid max property holds exactly against the direct route") {
    TwoViewInstance inst = sample_instance(ModelParams::cswig(120, 0.85, 0.85, 0.95), true, 21);
    inference::GridSearchResult res = inference::grid_search(inst, 0.2, 0.2);
    REQUIRE(!res.grid.empty());
    for (size_t i = 0; i < res.grid.size(); ++i) {
        spectral::SpectralResult direct = spectral::top_eigs(inst, res.grid[i], 1);
        CHECK(res.lambda1[i] == doctest::Approx(direct.eigenvalues(0)).epsilon(1e-7));
        CHECK(res.detection.statistic >= res.lambda1[i] - 1e-12);
    }
    CHECK(res.detection.argmax_guess.has_value());
}

TEST_CASE("grid points are the admissible lattice") {
    TwoViewInstance inst = sample_instance(ModelParams::cswig(60, 0.8, 0.8, 0.9), true, 2);
    inference::GridSearchResult res = inference::grid_search(inst, 0.2, 0.25);
    // mesh 0.25 on (0,1)^2: candidates {0.25,0.5,0.75}^2; kappa < 1 needs
    // a^2 + b^2 > 1 for CSWig, leaving only (0.75, 0.75)
    REQUIRE(res.grid.size() == 1);
    CHECK(res.grid[0].first == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(res.grid[0].second == doctest::Approx(0.75).epsilon(1e-12));

    inference::GridSearchResult fine = inference::grid_search(inst, 0.2, 0.3);
    // mesh 0.3: {0.3,0.6,0.9}^2 with a^2+b^2 > 1: (0.6,0.9),(0.9,0.6),(0.9,0.9)
    REQUIRE(fine.grid.size() == 3);
    CHECK(fine.grid[0].first == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(fine.grid[0].second == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(fine.grid[2].first == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("grid search validation") {
    TwoViewInstance wig = sample_instance(ModelParams::cswig(40, 0.8, 0.8, 0.9), true, 3);
    CHECK_THROWS_AS(inference::grid_search(wig, 0.3), ValidationError);       // eps >= 1/4
    CHECK_THROWS_AS(inference::grid_search(wig, 0.2, 0.7), ValidationError);  // empty grid
    TwoViewInstance cca = sample_instance(ModelParams::cca(40, 20, 20, 0.5), true, 3);
    CHECK_THROWS_AS(inference::grid_search(cca, 0.1), ValidationError);
}

TEST_CASE("grid search is deterministic") {
    TwoViewInstance inst = sample_instance(ModelParams::cswig(90, 0.8, 0.8, 0.9), true, 5);
    inference::GridSearchResult a = inference::grid_search(inst, 0.2, 0.2);
    inference::GridSearchResult b = inference::grid_search(inst, 0.2, 0.2);
    CHECK(a.detection.statistic == b.detection.statistic);
    for (size_t i = 0; i < a.lambda1.size(); ++i) CHECK(a.lambda1[i] == b.lambda1[i]);
}

TEST_CASE("detection separates planted from null") {
    // lambda_out - lambda_* = 0.072 for CCA at rho = 0.95; the threshold
    // constant must sit inside that window (the default c = 4 is far above
    // every desk-scale outlier and never rejects)
    ModelParams p = ModelParams::cca(2000, 1000, 1000, 0.95);
    inference::ThresholdRule rule{0.25};
    int planted_ok = 0, null_ok = 0;
    for (int s = 0; s < 6; ++s) {
        planted_ok += inference::detect(sample_instance(p, true, 40 + s), rule).reject_null;
        null_ok += !inference::detect(sample_instance(p, false, 40 + s), rule).reject_null;
    }
    CHECK(planted_ok >= 6);
    CHECK(null_ok >= 6);
    inference::DetectionResult def = inference::detect(sample_instance(p, false, 1));
    CHECK(def.threshold == doctest::Approx(deteq::edge(p.limit()) +
                                           4.0 * std::pow(2000.0, -1.0 / 3.0)));
    CHECK(!def.reject_null);
}

TEST_CASE("rho = 0 planted CCA behaves like the null under detection") {
    // P_0 coincides with Q for CCA: rejection rates must agree within 10 pts
    ModelParams p = ModelParams::cca(400, 200, 200, 0.0);
    inference::ThresholdRule rule{0.25};
    int planted_rej = 0, null_rej = 0;
    for (int s = 0; s < 10; ++s) {
        planted_rej += inference::detect(sample_instance(p, true, 70 + s), rule).reject_null;
        null_rej += inference::detect(sample_instance(p, false, 170 + s), rule).reject_null;
    }
    CHECK(std::abs(planted_rej - null_rej) <= 1);
}

TEST_CASE("split halves keep the marginal scale and decorrelate") {
    // the two split noises should be (empirically) uncorrelated against
    // fixed probe matrices
    int n = 40;
    ModelParams p = ModelParams::cswig(n, 0.8, 0.8, 0.9);
    rng::Stream probe(4242, "probe");
    Matrix m1(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m1(i, j) = probe.normal();

    int seeds = 200;
    std::vector<double> s1(seeds), s2(seeds);
    for (int sd = 0; sd < seeds; ++sd) {
        TwoViewInstance inst = sample_instance(p, false, 1000 + sd);  // pure noise
        inference::NoiseSplit split = inference::split_views(inst, 2000 + sd);
        s1[sd] = (m1.array() * split.u1.array()).sum();
        s2[sd] = (m1.array() * split.u2.array()).sum();
    }
    double mu1 = 0, mu2 = 0;
    for (int i = 0; i < seeds; ++i) {
        mu1 += s1[i];
        mu2 += s2[i];
    }
    mu1 /= seeds;
    mu2 /= seeds;
    double cov = 0, v1 = 0, v2 = 0;
    for (int i = 0; i < seeds; ++i) {
        cov += (s1[i] - mu1) * (s2[i] - mu2);
        v1 += (s1[i] - mu1) * (s1[i] - mu1);
        v2 += (s2[i] - mu2) * (s2[i] - mu2);
    }
    cov /= seeds;
    v1 /= seeds;
    v2 /= seeds;
    CHECK(std::abs(cov / std::sqrt(v1 * v2)) <= 4.0 / std::sqrt(double(seeds)));
}

TEST_CASE("strength estimator degenerate branch returns zero") {
    // synthetic second split: pure spike, recovery direction orthogonal to it
    int n = 50;
    rng::Stream st(11, "degenerate");
    Vector a(n);
    for (int i = 0; i < n; ++i) a(i) = st.normal();
    a /= a.norm();
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = st.normal();
    x -= x.dot(a) * a;
    x /= x.norm();
    Matrix u2 = 0.3 * a * a.transpose();
    CHECK(inference::wigner_strength_from(x, u2, 0.5) == 0.0);
    CHECK(inference::wigner_strength_from(a, u2, 0.5) != 0.0);
}

TEST_CASE("strength estimation is deterministic with exact eta") {
    ModelParams p = ModelParams::cswig(160, 0.85, 0.85, 0.95);
    TwoViewInstance inst = sample_instance(p, true, 31);
    inference::StrengthOptions opts;
    opts.mesh = 0.2;
    opts.eps = 0.2;
    inference::StrengthEstimate a = inference::estimate_strengths(inst, 99, opts);
    inference::StrengthEstimate b = inference::estimate_strengths(inst, 99, opts);
    CHECK(a.alpha_hat == b.alpha_hat);
    CHECK(a.beta_hat == b.beta_hat);
    CHECK(a.eta == std::pow(160.0, -0.2));
    CHECK(a.aux_seed == 99);
    inference::StrengthEstimate c = inference::estimate_strengths(inst, 100, opts);
    CHECK(c.alpha_hat != a.alpha_hat);  // aux noise actually enters
    CHECK_THROWS_AS(
        inference::estimate_strengths(sample_instance(ModelParams::cca(20, 8, 8, 0.5), true, 1), 1),
        ValidationError);
}

TEST_CASE("wigner estimator with oracle recovery direction") {
    // feeding the true spike direction isolates the estimator itself; its
    // noise floor at n=2000 is ~0.2, so the check stays coarse
    ModelParams p = ModelParams::cswig(2000, 0.9, 0.9, 0.98);
    for (std::uint64_t seed : {3u, 4u}) {
        TwoViewInstance inst = sample_instance(p, true, seed);
        inference::NoiseSplit split = inference::split_views(inst, seed + 100);
        Vector x = inst.planted->a / inst.planted->a.norm();
        double est = inference::wigner_strength_from(x, split.u2, split.eta);
        CHECK(std::abs(est - 0.9) <= 0.5);
    }
}

TEST_CASE("wishart estimator core on a synthetic spike") {
    // U2 = sqrt(gamma/m) u a^T + small noise floor: estimator recovers
    // roughly gamma * (1 + 1/eta) scaling through the A,B quadratics
    int n = 400, m = 200;
    double eta = std::pow(double(n), -0.2);
    double alpha = 0.6, gamma = alpha / (1.0 + 1.0 / eta);
    rng::Stream st(5, "wish.synth");
    Vector a(m), u(n);
    for (int i = 0; i < m; ++i) a(i) = st.normal();
    a /= a.norm();
    for (int i = 0; i < n; ++i) u(i) = st.normal();
    Matrix z(n, m);
    double sigma = 1.0 / std::sqrt(double(m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) z(i, j) = sigma * st.normal();
    Matrix u2 = std::sqrt(gamma / m) * u * a.transpose() + z;
    double est = inference::wishart_strength_from(a, u2, double(n) / m, eta);
    CHECK(std::abs(est - alpha) <= 0.5);  // coarse finite-n accuracy
}
