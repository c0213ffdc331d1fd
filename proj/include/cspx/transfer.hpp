#pragma once

#include <optional>
#include <vector>

#include "cspx/csp.hpp"
#include "cspx/datamodel.hpp"

namespace cspx {

// ---------------------------------------------------------------- covCSP ----

struct CovCspConfig {
    double lambda = 0.0;  // in [0, 1]
};

/// (1 - lambda) * Sigma_target + lambda * mean(Sigma_donors)
Matrix covcsp_covariance(const Matrix& sigma_target, const std::vector<Matrix>& sigma_donors,
                         double lambda);

SpatialFilterBank covcsp_train(const SubjectRecord& target,
                               const std::vector<SubjectRecord>& donors, double lambda, int m);

/// Covariance-level entry point (per-class target/donor covariances).
SpatialFilterBank covcsp_train_cov(const Matrix& s1, const Matrix& s2,
                                   const std::vector<Matrix>& donor_s1,
                                   const std::vector<Matrix>& donor_s2, double lambda, int m);

// ---------------------------------------------------------------- mtCSP -----

struct MtCspConfig {
    double lambda1 = 1.0;  // penalty on the global part w0
    double lambda2 = 1.0;  // penalty on the subject-specific parts v_i
    int max_iterations = 200;
    double objective_tolerance = 1e-8;
};

/// Per-subject class covariances entering the mtCSP objective.
struct ClassCovPair {
    Matrix s1;
    Matrix s2;
};

struct MtCspSolution {
    Matrix w0;  // C x 2m global components, one column per extracted filter
    std::vector<SpatialFilterBank> per_subject;   // filters w_i = w0 + v_i, unit-normalized
    std::vector<std::vector<double>> objective_traces;  // one non-decreasing trace per filter slot
};

/// Sequential filter extraction maximizing the Eq.-style sum of penalized
/// Rayleigh quotients; later filters are conjugate to earlier ones through the
/// numerator-class covariance of each subject. init supplies one starting bank
/// per subject (typically that subject's own CSP, or a warm start).
MtCspSolution mtcsp_train(const std::vector<ClassCovPair>& subjects, const MtCspConfig& cfg,
                          int m, const std::vector<SpatialFilterBank>& init);

// ---------------------------------------------------------------- ssCSP -----

struct SsCspConfig {
    int l = 5;                  // eigenvectors per donor
    int nu = 5;                 // common-subspace dimension
    double lambda_penalty = 1e5;
    std::optional<double> adaptive_l_threshold;  // fraction of |eigenvalue| mass
};

struct NonstationaryDirections {
    std::string subject_id;
    Matrix vectors;      // C x l, orthonormal
    Vector eigenvalues;  // signed, |.| descending
    bool degenerate = false;
};

NonstationaryDirections nonstationary_directions(const SubjectRecord& rec, int l);

/// Covariance-level variant (pooled train/test session covariances).
NonstationaryDirections nonstationary_directions_cov(const Matrix& s_train, const Matrix& s_test,
                                                     int l, const std::string& subject_id = "");

/// pca_no_mean over the aggregated donor directions.
OrthonormalBasis common_nonstationary_subspace(const std::vector<NonstationaryDirections>& dirs,
                                               int nu);

SpatialFilterBank sscsp_train(const SubjectRecord& target, const std::vector<SubjectRecord>& donors,
                              const SsCspConfig& cfg, int m);

/// Penalized CSP against a precomputed penalty basis.
SpatialFilterBank sscsp_train_basis(const Matrix& s1, const Matrix& s2,
                                    const OrthonormalBasis& p_nu, double lambda_penalty, int m);

/// Donor non-stationary subspace computed after deflating each donor's own CSP
/// span from its session covariances.
OrthonormalBasis noise_only_subspace(const std::vector<SubjectRecord>& donors, int l, int nu, int m);

/// Project out the donor-estimated non-stationary subspace, run mtCSP in the
/// complement coordinates, map the target's filters back.
SpatialFilterBank ss_mt_csp_train(const SubjectRecord& target,
                                  const std::vector<SubjectRecord>& donors,
                                  const SsCspConfig& ss_cfg, const MtCspConfig& mt_cfg, int m);

/// Covariance-level ss+mt composition; subjects[0] is the target.
SpatialFilterBank ss_mt_csp_train_cov(const std::vector<ClassCovPair>& subjects,
                                      const OrthonormalBasis& p_nu, const MtCspConfig& mt_cfg,
                                      int m);

}  // namespace cspx
