#pragma once

#include "cspx/datamodel.hpp"
#include "cspx/numerics.hpp"

namespace cspx {

/// Bank of 2m spatial filters: columns 0..m-1 favor class 1 (descending
/// strength), columns m..2m-1 favor class 2 (descending class-2 strength).
/// eigenvalues holds the Rayleigh quotient recorded per filter; patterns is
/// empty until compute_patterns fills it.
struct SpatialFilterBank {
    Matrix filters;      // C x 2m, unit-norm columns
    Matrix patterns;     // C x 2m or empty
    Vector eigenvalues;  // length 2m
    int m = 0;
};

SpatialFilterBank csp_train(const Matrix& sigma1, const Matrix& sigma2, int m);

/// CSP with penalty matrix Delta added to the denominator; class-2 filters
/// come from the mirrored problem gen_sym_eig(sigma2, sigma1+sigma2+Delta).
SpatialFilterBank penalized_csp_train(const Matrix& sigma1, const Matrix& sigma2,
                                      const Matrix& penalty, int m);

/// value_k = ln(w_k^T (X X^T / T) w_k + 1e-12)
Vector log_variance_features(const SpatialFilterBank& bank, const Matrix& trial);

/// Rows of log-variance features, one per trial.
Matrix feature_matrix(const SpatialFilterBank& bank, const TrialSet& ts);

/// A = Sigma W (W^T Sigma W)^-1; satisfies A^T W = I.
Matrix compute_patterns(const SpatialFilterBank& bank, const Matrix& sigma_pooled);

}  // namespace cspx
