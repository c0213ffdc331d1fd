#pragma once

#include <vector>

#include "cspx/numerics.hpp"

namespace cspx {

struct LdaModel {
    Vector weight;
    double bias = 0.0;
};

/// Two-class LDA: weight = pooled-covariance pseudo-inverse * (mu1 - mu2),
/// bias = -weight^T (mu1 + mu2) / 2. Class 1 scores positive.
/// features: one row per sample.
LdaModel lda_train(const Matrix& features, const std::vector<int>& labels);

/// Class 1 iff weight^T x + bias > 0; exact ties go to class 2.
int lda_predict(const LdaModel& model, const Vector& feature);

double accuracy(const LdaModel& model, const Matrix& features, const std::vector<int>& labels);

}  // namespace cspx
