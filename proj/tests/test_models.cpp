#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twoview/errors.hpp"
#include "twoview/models.hpp"

using namespace twoview;

TEST_CASE("instance shapes per model") {
    TwoViewInstance cca = sample_instance(ModelParams::cca(50, 20, 30, 0.5), true, 1);
    CHECK(cca.U.rows() == 50);
    CHECK(cca.U.cols() == 20);
    CHECK(cca.V.cols() == 30);
    CHECK(cca.planted->a.size() == 20);
    CHECK(cca.planted->b.size() == 30);

    TwoViewInstance wig = sample_instance(ModelParams::cswig(40, 0.8, 0.8, 0.9), true, 1);
    CHECK(wig.U.rows() == 40);
    CHECK(wig.U.cols() == 40);

    TwoViewInstance wish = sample_instance(ModelParams::cswish(60, 30, 0.6, 0.6, 0.9), true, 1);
    CHECK(wish.U.rows() == 60);
    CHECK(wish.U.cols() == 30);
    CHECK(wish.planted->a.size() == 30);
    CHECK(wish.planted->u.size() == 60);
}

TEST_CASE("null instances carry no truth") {
    CHECK(!sample_instance(ModelParams::cswig(30, 0.8, 0.8, 0.9), false, 3).planted.has_value());
    CHECK(!sample_instance(ModelParams::cca(30, 10, 10, 0.9), false, 3).planted.has_value());
}

TEST_CASE("identical (params, seed) gives a bit-identical instance") {
    ModelParams p = ModelParams::cswish(50, 25, 0.6, 0.5, 0.7);
    TwoViewInstance a = sample_instance(p, true, 987), b = sample_instance(p, true, 987);
    CHECK((a.U - b.U).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.V - b.V).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.planted->a - b.planted->a).cwiseAbs().maxCoeff() == 0.0);
    TwoViewInstance c = sample_instance(p, true, 988);
    CHECK((a.U - c.U).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("planted CSWig views are exactly symmetric") {
    for (std::uint64_t seed : {17u, 18u, 19u}) {
        TwoViewInstance wig = sample_instance(ModelParams::cswig(60, 0.7, 0.9, 0.8), true, seed);
        CHECK((wig.U - wig.U.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((wig.V - wig.V.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(ModelParams::cca(50, 1, 10, 0.5), ValidationError);
    CHECK_THROWS_AS(ModelParams::cca(50, 10, 10, 1.5), ValidationError);
    CHECK_THROWS_AS(ModelParams::cswig(50, 1.2, 0.8, 0.5), ValidationError);
    CHECK_THROWS_AS(ModelParams::cswish(100, 50, 0.9, 0.9, 0.5), ValidationError);  // tau a^2 > 1
}

TEST_CASE("CCA rho=0 decouples the views") {
    // sqrt(mk) * mean_i U_i V_i^T has Frobenius norm O(sqrt(mk/n)) and tiny
    // projection on a b^T
    int n = 800, m = 400, k = 400;
    for (std::uint64_t seed : {5u, 6u}) {
        TwoViewInstance inst = sample_instance(ModelParams::cca(n, m, k, 0.0), true, seed);
        Matrix cross = std::sqrt(double(m) * k) / n * (inst.U.transpose() * inst.V);
        CHECK(cross.norm() <= 3.0 * std::sqrt(double(m) * k / n));
        double proj = inst.planted->a.dot(cross * inst.planted->b);
        CHECK(std::abs(proj) <= 5.0 / std::sqrt(double(n)));
    }
}

TEST_CASE("CSWig spike concentration over 100 seeds") {
    int n = 400;
    double rho = 0.9;
    int pass = 0;
    for (int seed = 0; seed < 100; ++seed) {
        TwoViewInstance inst = sample_instance(ModelParams::cswig(n, 0.8, 0.8, rho), true, seed);
        double ab = inst.planted->a.dot(inst.planted->b);
        double na = inst.planted->a.squaredNorm();
        bool ok = std::abs(ab - rho) <= 3.0 / std::sqrt(double(n)) &&
                  std::abs(na - 1.0) <= 3.0 * std::sqrt(2.0 / n);
        pass += ok ? 1 : 0;
    }
    CHECK(pass >= 95);
}

TEST_CASE("CCA empirical correlation recovers rho") {
    int n = 400, m = 200, k = 200;
    double rho = 0.85;
    double acc = 0.0;
    int seeds = 50;
    for (int seed = 0; seed < seeds; ++seed) {
        TwoViewInstance inst = sample_instance(ModelParams::cca(n, m, k, rho), true, seed);
        double est = std::sqrt(double(m) * k) / n *
                     (inst.U * inst.planted->a).dot(inst.V * inst.planted->b);
        acc += est;
    }
    CHECK(std::abs(acc / seeds - rho) <= 4.0 / std::sqrt(double(n)));
}

TEST_CASE("CCA rows pass a covariance sanity check") {
    int n = 1200, m = 300;
    TwoViewInstance inst = sample_instance(ModelParams::cca(n, m, 300, 0.6), true, 33);
    Matrix cov = double(m) / n * (inst.U.transpose() * inst.U);  // rows scaled by sqrt(m)
    Vector evs = linalg::sym_eigvalues(cov - Matrix::Identity(m, m));
    double op = std::max(std::abs(evs(0)), std::abs(evs(m - 1)));
    CHECK(op <= 3.0 * std::sqrt(double(m) / n));
}

TEST_CASE("matrix CSV round trip") {
    Matrix m = oracles::random_symmetric(7, 3).topLeftCorner(5, 7);
    std::string path = "test_matrix_dump.csv";
    save_matrix_csv(path, m);
    Matrix back = load_matrix_csv(path);
    CHECK((m - back).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}
