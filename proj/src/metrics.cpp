#include "cspx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/QR>

#include "cspx/csp.hpp"
#include "cspx/transfer.hpp"

namespace cspx {

double symmetric_kl(const Matrix& sigma_i, const Matrix& sigma_j) {
    if (sigma_i.rows() != sigma_j.rows() || sigma_i.cols() != sigma_j.cols())
        throw std::invalid_argument("symmetric_kl: dimension mismatch");
    Eigen::LLT<Matrix> li(0.5 * (sigma_i + sigma_i.transpose()));
    Eigen::LLT<Matrix> lj(0.5 * (sigma_j + sigma_j.transpose()));
    if (li.info() != Eigen::Success || lj.info() != Eigen::Success)
        throw std::invalid_argument("symmetric_kl: input not positive definite");
    double k = static_cast<double>(sigma_i.rows());
    // log-det terms cancel in the symmetrized divergence:
    // 0.5 * (tr(Sj^-1 Si) + tr(Si^-1 Sj)) - k
    double tij = lj.solve(sigma_i).trace();
    double tji = li.solve(sigma_j).trace();
    return 0.5 * (tij + tji) - k;
}

OrthonormalBasis discriminative_subspace(const Matrix& s1, const Matrix& s2, int d) {
    int C = static_cast<int>(s1.rows());
    if (d < 1 || d > C) throw std::invalid_argument("discriminative_subspace: d out of range");
    EigenPairs ep = gen_sym_eig(s1, spd_ridge(s1 + s2));
    // rank filters by discriminativity max(lambda, 1 - lambda)
    std::vector<int> idx(static_cast<size_t>(C));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::max(ep.values[a], 1 - ep.values[a]) > std::max(ep.values[b], 1 - ep.values[b]);
    });
    Matrix W(C, d);
    for (int j = 0; j < d; ++j) W.col(j) = ep.vectors.col(idx[static_cast<size_t>(j)]);
    Eigen::HouseholderQR<Matrix> qr(W);
    Matrix Q = qr.householderQ() * Matrix::Identity(C, d);
    return OrthonormalBasis::from(Q);
}

OrthonormalBasis discriminative_subspace(const SubjectRecord& rec, int d) {
    Matrix s1 = class_covariance(rec.train, 1).matrix;
    Matrix s2 = class_covariance(rec.train, 2).matrix;
    return discriminative_subspace(s1, s2, d);
}

SimilarityReport subject_similarity_report(const std::vector<SubjectRecord>& records,
                                           SubspaceKind kind, int d) {
    if (records.size() < 2)
        throw std::invalid_argument("subject_similarity_report: need >= 2 subjects");
    std::vector<OrthonormalBasis> bases;
    for (const SubjectRecord& rec : records) {
        if (kind == SubspaceKind::Discriminative)
            bases.push_back(discriminative_subspace(rec, d));
        else
            bases.push_back(OrthonormalBasis::from(nonstationary_directions(rec, d).vectors));
    }
    size_t n = records.size();
    SimilarityReport rep;
    rep.kind = kind;
    rep.dimension = d;
    rep.pairwise = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double sum = 0;
    int pairs = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double s = principal_angle_similarity(bases[i], bases[j]);
            rep.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
            rep.pairwise(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
            sum += s;
            ++pairs;
        }
    rep.mean = sum / pairs;
    return rep;
}

std::vector<double> random_subspace_null(const OrthonormalBasis& reference, int d, int n_draws,
                                         std::uint64_t seed) {
    int C = reference.ambient_dim();
    if (d < 1 || d > C) throw std::invalid_argument("random_subspace_null: d out of range");
    std::vector<double> scores;
    scores.reserve(static_cast<size_t>(n_draws));
    for (int k = 0; k < n_draws; ++k) {
        Matrix G = gaussian_matrix(C, d, derive_seed(seed, static_cast<std::uint64_t>(k)));
        Eigen::HouseholderQR<Matrix> qr(G);
        Matrix Q = qr.householderQ() * Matrix::Identity(C, d);
        scores.push_back(principal_angle_similarity(reference, OrthonormalBasis::from(Q)));
    }
    return scores;
}

PermutationTestResult paired_permutation_test(const std::vector<double>& perf_a,
                                              const std::vector<double>& perf_b,
                                              std::uint64_t seed) {
    if (perf_a.size() != perf_b.size())
        throw std::invalid_argument("paired_permutation_test: length mismatch");
    if (perf_a.empty()) throw std::invalid_argument("paired_permutation_test: empty input");
    size_t n = perf_a.size();
    std::vector<double> diff(n);
    for (size_t i = 0; i < n; ++i) diff[i] = perf_a[i] - perf_b[i];
    double observed = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);

    PermutationTestResult res;
    res.observed_mean_difference = observed;
    auto stat = [&](auto&& sign_of) {
        double s = 0;
        for (size_t i = 0; i < n; ++i) s += sign_of(i) * diff[i];
        return s / static_cast<double>(n);
    };

    if (n <= 10) {
        std::uint64_t total = 1ULL << n;
        std::uint64_t count = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double s = stat([&](size_t i) { return (mask >> i) & 1 ? -1.0 : 1.0; });
            if (s >= observed) ++count;
        }
        res.exhaustive = true;
        res.n_permutations = static_cast<int>(total);
        res.p_value = static_cast<double>(count) / static_cast<double>(total);
    } else {
        const int total = 1024;
        std::mt19937_64 rng(seed);
        std::vector<double> signs(n);
        int count = 1;  // identity permutation
        for (int k = 1; k < total; ++k) {
            for (size_t i = 0; i < n; ++i) signs[i] = (rng() & 1) ? -1.0 : 1.0;
            if (stat([&](size_t i) { return signs[i]; }) >= observed) ++count;
        }
        res.exhaustive = false;
        res.n_permutations = total;
        res.p_value = static_cast<double>(count) / static_cast<double>(total);
    }
    return res;
}

}  // namespace cspx
