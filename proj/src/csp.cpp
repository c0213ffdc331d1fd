#include "cspx/csp.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace cspx {

namespace {

constexpr double kLogFloor = 1e-12;

void check_inputs(const Matrix& s1, const Matrix& s2, int m) {
    if (s1.rows() != s2.rows() || s1.cols() != s2.cols())
        throw std::invalid_argument("csp_train: covariance dimension mismatch");
    if (m < 1) throw std::invalid_argument("csp_train: m must be >= 1");
    if (2 * m > s1.rows()) throw std::invalid_argument("csp_train: 2m exceeds channel count");
}

Matrix unit_columns(Matrix W) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        double n = W.col(j).norm();
        if (n <= 0) throw std::runtime_error("csp_train: zero-norm filter");
        W.col(j) /= n;
    }
    return W;
}

}  // namespace

SpatialFilterBank csp_train(const Matrix& sigma1, const Matrix& sigma2, int m) {
    check_inputs(sigma1, sigma2, m);
    Matrix denom = spd_ridge(sigma1 + sigma2);
    EigenPairs ep = gen_sym_eig(sigma1, denom);  // descending
    int C = static_cast<int>(sigma1.rows());

    SpatialFilterBank bank;
    bank.m = m;
    bank.filters.resize(C, 2 * m);
    bank.eigenvalues.resize(2 * m);
    for (int j = 0; j < m; ++j) {
        bank.filters.col(j) = ep.vectors.col(j);
        bank.eigenvalues[j] = ep.values[j];
        // class-2 block ordered by descending class-2 strength (ascending lambda)
        bank.filters.col(m + j) = ep.vectors.col(C - 1 - j);
        bank.eigenvalues[m + j] = ep.values[C - 1 - j];
    }
    bank.filters = unit_columns(bank.filters);
    return bank;
}

SpatialFilterBank penalized_csp_train(const Matrix& sigma1, const Matrix& sigma2,
                                      const Matrix& penalty, int m) {
    check_inputs(sigma1, sigma2, m);
    if (penalty.rows() != sigma1.rows() || penalty.cols() != sigma1.cols())
        throw std::invalid_argument("penalized_csp_train: penalty dimension mismatch");
    Matrix denom = spd_ridge(sigma1 + sigma2 + penalty);
    EigenPairs e1 = gen_sym_eig(sigma1, denom);
    EigenPairs e2 = gen_sym_eig(sigma2, denom);
    int C = static_cast<int>(sigma1.rows());

    SpatialFilterBank bank;
    bank.m = m;
    bank.filters.resize(C, 2 * m);
    bank.eigenvalues.resize(2 * m);
    for (int j = 0; j < m; ++j) {
        bank.filters.col(j) = e1.vectors.col(j);
        bank.eigenvalues[j] = e1.values[j];
        bank.filters.col(m + j) = e2.vectors.col(j);
        bank.eigenvalues[m + j] = e2.values[j];
    }
    bank.filters = unit_columns(bank.filters);
    return bank;
}

Vector log_variance_features(const SpatialFilterBank& bank, const Matrix& trial) {
    if (trial.rows() != bank.filters.rows())
        throw std::invalid_argument("log_variance_features: channel mismatch");
    Matrix Y = bank.filters.transpose() * trial;  // 2m x T
    Vector out(bank.filters.cols());
    double T = static_cast<double>(trial.cols());
    for (Eigen::Index k = 0; k < Y.rows(); ++k)
        out[k] = std::log(Y.row(k).squaredNorm() / T + kLogFloor);
    return out;
}

Matrix feature_matrix(const SpatialFilterBank& bank, const TrialSet& ts) {
    Matrix F(static_cast<Eigen::Index>(ts.trials.size()), bank.filters.cols());
    for (size_t t = 0; t < ts.trials.size(); ++t)
        F.row(static_cast<Eigen::Index>(t)) = log_variance_features(bank, ts.trials[t]).transpose();
    return F;
}

Matrix compute_patterns(const SpatialFilterBank& bank, const Matrix& sigma_pooled) {
    const Matrix& W = bank.filters;
    if (sigma_pooled.rows() != W.rows())
        throw std::invalid_argument("compute_patterns: dimension mismatch");
    Matrix G = W.transpose() * sigma_pooled * W;
    Eigen::FullPivLU<Matrix> lu(G);
    if (!lu.isInvertible())
        throw std::invalid_argument("compute_patterns: W^T Sigma W is singular");
    return sigma_pooled * W * lu.inverse();
}

}  // namespace cspx
