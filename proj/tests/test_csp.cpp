#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cspx/csp.hpp"
#include "cspx/metrics.hpp"
#include "cspx/toygen.hpp"

using namespace cspx;

namespace {
Matrix diag2(double a, double b) {
    Matrix S = Matrix::Zero(2, 2);
    S(0, 0) = a;
    S(1, 1) = b;
    return S;
}
}  // namespace

TEST_CASE("csp_train 2-D hand example") {
    SpatialFilterBank bank = csp_train(diag2(4, 1), diag2(1, 4), 1);
    CHECK(std::abs(bank.filters(0, 0)) == doctest::Approx(1).epsilon(1e-10));
    CHECK(std::abs(bank.filters(1, 1)) == doctest::Approx(1).epsilon(1e-10));
    CHECK(bank.eigenvalues[0] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(bank.eigenvalues[1] == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("csp_train symmetric case: no discriminative direction") {
    Matrix S = Matrix::Identity(3, 3) * 2.0;
    SpatialFilterBank bank = csp_train(S, S, 1);
    CHECK(bank.eigenvalues[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(bank.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("csp_train rejects 2m > C") {
    CHECK_THROWS_AS(csp_train(diag2(1, 1), diag2(1, 1), 2), std::invalid_argument);
}

TEST_CASE("csp eigenvalues invariant under joint basis change; all in [0,1]") {
    Matrix G1 = gaussian_matrix(6, 6, 10), G2 = gaussian_matrix(6, 6, 11);
    Matrix S1 = G1 * G1.transpose() + 0.1 * Matrix::Identity(6, 6);
    Matrix S2 = G2 * G2.transpose() + 0.1 * Matrix::Identity(6, 6);
    SpatialFilterBank a = csp_train(S1, S2, 3);
    Matrix R = gaussian_matrix(6, 6, 12);  // invertible w.h.p.
    Matrix T1 = R.transpose() * S1 * R, T2 = R.transpose() * S2 * R;
    SpatialFilterBank b = csp_train(0.5 * (T1 + T1.transpose()), 0.5 * (T2 + T2.transpose()), 3);
    for (int j = 0; j < 6; ++j) {
        CHECK(a.eigenvalues[j] == doctest::Approx(b.eigenvalues[j]).epsilon(1e-8));
        CHECK(a.eigenvalues[j] >= -1e-10);
        CHECK(a.eigenvalues[j] <= 1 + 1e-10);
        CHECK(a.filters.col(j).norm() == doctest::Approx(1).epsilon(1e-12));
    }
}

TEST_CASE("csp_train recovers the toy discriminative subspace") {
    ToySpec spec;
    PopulationSpec pop;
    pop.n_subjects = 1;
    pop.seed = 31;
    Population p = gen_population(spec, pop);
    Matrix s1 = class_covariance(p.subjects[0].train, 1).matrix;
    Matrix s2 = class_covariance(p.subjects[0].train, 2).matrix;
    SpatialFilterBank bank = csp_train(s1, s2, 3);
    // class 1 carries the excess variance on the discriminative axes, so the
    // class-1 filters (first m columns) must live in the true subspace
    Eigen::HouseholderQR<Matrix> qr(bank.filters.leftCols(3));
    auto span = OrthonormalBasis::from(qr.householderQ() * Matrix::Identity(80, 3));
    CHECK(principal_angle_similarity(span, p.truth.true_discriminative(0)) >= 0.9);
}

TEST_CASE("penalized_csp_train zero penalty consistency") {
    Matrix G1 = gaussian_matrix(5, 5, 20), G2 = gaussian_matrix(5, 5, 21);
    Matrix S1 = G1 * G1.transpose() + 0.1 * Matrix::Identity(5, 5);
    Matrix S2 = G2 * G2.transpose() + 0.1 * Matrix::Identity(5, 5);
    SpatialFilterBank plain = csp_train(S1, S2, 2);
    SpatialFilterBank pen = penalized_csp_train(S1, S2, Matrix::Zero(5, 5), 2);
    for (int j = 0; j < 2; ++j)
        CHECK(std::abs(plain.filters.col(j).dot(pen.filters.col(j))) ==
              doctest::Approx(1).epsilon(1e-8));
}

TEST_CASE("penalized_csp_train large-penalty orthogonality") {
    Matrix S1 = Matrix::Zero(3, 3), S2 = Matrix::Zero(3, 3);
    S1.diagonal() << 4, 1, 1;
    S2.diagonal() << 1, 1, 4;
    Matrix delta = Matrix::Zero(3, 3);
    delta(0, 0) = 1e5;
    SpatialFilterBank bank = penalized_csp_train(S1, S2, delta, 1);
    CHECK(std::abs(bank.filters(0, 0)) <= 1e-3);  // class-1 filter avoids e1
}

TEST_CASE("penalized_csp_train uniform penalty keeps ordering deterministic") {
    Matrix S1 = Matrix::Zero(3, 3), S2 = Matrix::Zero(3, 3);
    S1.diagonal() << 4, 2, 1;
    S2.diagonal() << 1, 2, 4;
    SpatialFilterBank bank = penalized_csp_train(S1, S2, 1e5 * Matrix::Identity(3, 3), 1);
    CHECK(bank.eigenvalues[0] <= 1e-3);  // spectrum shrinks uniformly
    CHECK(std::abs(bank.filters(0, 0)) == doctest::Approx(1).epsilon(1e-6));
    CHECK(std::abs(bank.filters(2, 1)) == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("log_variance_features scaling and floors") {
    Matrix S1 = diag2(4, 1), S2 = diag2(1, 4);
    SpatialFilterBank bank = csp_train(S1, S2, 1);

    Matrix X = gaussian_matrix(2, 500, 3);
    Vector f1 = log_variance_features(bank, X);
    Vector f2 = log_variance_features(bank, 2.0 * X);
    for (int k = 0; k < 2; ++k)
        CHECK(f2[k] - f1[k] == doctest::Approx(std::log(4.0)).epsilon(1e-9));

    Vector fz = log_variance_features(bank, Matrix::Zero(2, 10));
    CHECK(fz[0] == doctest::Approx(std::log(1e-12)));

    // unit variance along filters -> features ~ 0
    Matrix Y = gaussian_matrix(2, 200000, 6);
    Vector fy = log_variance_features(bank, Y);
    CHECK(std::abs(fy[0]) <= 0.05);

    // sign flip of a filter leaves features unchanged
    SpatialFilterBank flipped = bank;
    flipped.filters.col(0) = -flipped.filters.col(0);
    CHECK((log_variance_features(flipped, X) - f1).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("compute_patterns definition checks") {
    SpatialFilterBank bank;
    bank.m = 1;
    Matrix G = gaussian_matrix(4, 2, 40);
    Eigen::HouseholderQR<Matrix> qr(G);
    bank.filters = qr.householderQ() * Matrix::Identity(4, 2);
    CHECK((compute_patterns(bank, Matrix::Identity(4, 4)) - bank.filters)
              .cwiseAbs()
              .maxCoeff() <= 1e-10);

    Matrix H = gaussian_matrix(4, 4, 41);
    Matrix S = H * H.transpose() + 0.1 * Matrix::Identity(4, 4);
    Matrix A = compute_patterns(bank, S);
    CHECK((A.transpose() * bank.filters - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);

    // diagonal hand example: patterns equal filters
    SpatialFilterBank d = csp_train(diag2(4, 1), diag2(1, 4), 1);
    Matrix Ad = compute_patterns(d, 0.5 * (diag2(4, 1) + diag2(1, 4)));
    for (int j = 0; j < 2; ++j)
        CHECK(std::abs(Ad.col(j).normalized().dot(d.filters.col(j))) ==
              doctest::Approx(1).epsilon(1e-8));
}
