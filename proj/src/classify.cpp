#include "cspx/classify.hpp"

#include <stdexcept>

namespace cspx {

LdaModel lda_train(const Matrix& features, const std::vector<int>& labels) {
    Eigen::Index n = features.rows();
    if (static_cast<size_t>(n) != labels.size())
        throw std::invalid_argument("lda_train: label count mismatch");
    int n1 = 0, n2 = 0;
    for (int l : labels) {
        if (l == 1) ++n1;
        else if (l == 2) ++n2;
        else throw std::invalid_argument("lda_train: label must be 1 or 2");
    }
    if (n1 < 2 || n2 < 2)
        throw std::invalid_argument("lda_train: need >= 2 samples of each class");

    Eigen::Index d = features.cols();
    Vector mu1 = Vector::Zero(d), mu2 = Vector::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i)
        (labels[static_cast<size_t>(i)] == 1 ? mu1 : mu2) += features.row(i).transpose();
    mu1 /= n1;
    mu2 /= n2;

    Matrix Sw = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector c = features.row(i).transpose() -
                   (labels[static_cast<size_t>(i)] == 1 ? mu1 : mu2);
        Sw += c * c.transpose();
    }
    Sw /= static_cast<double>(n);

    // pseudo-inverse with relative cutoff 1e-10
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Sw + Sw.transpose()));
    const Vector& w = es.eigenvalues();
    double cutoff = 1e-10 * std::max(w.cwiseAbs().maxCoeff(), 1e-300);
    Vector inv = Vector::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j)
        if (w[j] > cutoff) inv[j] = 1.0 / w[j];

    LdaModel model;
    model.weight = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() *
                   (mu1 - mu2);
    model.bias = -model.weight.dot(mu1 + mu2) / 2.0;
    return model;
}

int lda_predict(const LdaModel& model, const Vector& feature) {
    if (feature.size() != model.weight.size())
        throw std::invalid_argument("lda_predict: dimension mismatch");
    return (model.weight.dot(feature) + model.bias > 0) ? 1 : 2;
}

double accuracy(const LdaModel& model, const Matrix& features, const std::vector<int>& labels) {
    if (static_cast<size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("accuracy: label count mismatch");
    if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
    int correct = 0;
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        correct += (lda_predict(model, features.row(i).transpose()) ==
                    labels[static_cast<size_t>(i)]);
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace cspx
