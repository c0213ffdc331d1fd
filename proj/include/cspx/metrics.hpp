#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspx/datamodel.hpp"
#include "cspx/numerics.hpp"

namespace cspx {

enum class SubspaceKind { Discriminative, Nonstationary };

struct SimilarityReport {
    Matrix pairwise;   // symmetric, unit diagonal
    double mean = 0;   // mean over distinct pairs
    SubspaceKind kind = SubspaceKind::Discriminative;
    int dimension = 0;
};

struct PermutationTestResult {
    double observed_mean_difference = 0;
    double p_value = 1;
    int n_permutations = 0;
    bool exhaustive = false;
};

/// Symmetric KL divergence between zero-mean Gaussians N(0, Si), N(0, Sj).
double symmetric_kl(const Matrix& sigma_i, const Matrix& sigma_j);

/// Orthonormalized span of the d CSP filters ranked by max(lambda, 1-lambda).
OrthonormalBasis discriminative_subspace(const Matrix& s1, const Matrix& s2, int d);
OrthonormalBasis discriminative_subspace(const SubjectRecord& rec, int d);

SimilarityReport subject_similarity_report(const std::vector<SubjectRecord>& records,
                                           SubspaceKind kind, int d);

/// Similarity scores of `reference` against n_draws Haar-random d-dim subspaces.
std::vector<double> random_subspace_null(const OrthonormalBasis& reference, int d, int n_draws,
                                         std::uint64_t seed);

/// One-sided paired permutation test on mean(perf_a - perf_b); exhaustive sign
/// enumeration when 2^n <= 1024, otherwise 1024 seeded flips (identity included).
PermutationTestResult paired_permutation_test(const std::vector<double>& perf_a,
                                              const std::vector<double>& perf_b,
                                              std::uint64_t seed = 12345);

}  // namespace cspx
