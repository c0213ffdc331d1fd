#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace cspx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigen-decomposition result; sort order is fixed by the requesting operation.
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

enum class EigOrder { DescendingValue, DescendingAbsValue };

/// Orthonormal basis of a subspace of R^ambient (columns^T columns = I within 1e-8).
struct OrthonormalBasis {
    Matrix columns;

    static OrthonormalBasis from(Matrix cols);          // validates orthonormality
    static OrthonormalBasis empty(int ambient_dim);     // k = 0

    int ambient_dim() const { return static_cast<int>(columns.rows()); }
    int dim() const { return static_cast<int>(columns.cols()); }
};

struct RotationSample {
    Matrix rotation;
    Matrix generator;   // antisymmetric M with rotation = expm(M)
};

/// Symmetric eigensolve with deterministic sign convention
/// (largest-magnitude entry of each eigenvector is positive).
EigenPairs sym_eig(const Matrix& S, EigOrder order);

/// Generalized symmetric-definite eigensolve A w = lambda B w via Cholesky
/// whitening of B. Eigenvalues descending, vectors B-orthonormal.
EigenPairs gen_sym_eig(const Matrix& A, const Matrix& B);

/// Adds a ridge of 1e-10*trace/dim when S is not positive definite enough to
/// pass gen_sym_eig's denominator precondition; otherwise returns S unchanged.
Matrix spd_ridge(const Matrix& S);

/// Matrix exponential of an antisymmetric matrix; result is a rotation.
Matrix expm_antisym(const Matrix& M);

/// Random rotation R = expm(0.5*(G - G^T)) with G iid standard normal.
RotationSample rand_rotation(int dim, std::uint64_t seed);

/// Perturbed rotation expm(0.5*(M2 - M2^T)) with M2 = M + eta*Xi; eta = 0
/// reproduces expm_antisym(M) exactly.
Matrix perturb_rotation(const Matrix& generator, double eta, std::uint64_t seed);

/// Mean of squared cosines of the principal angles between the two spans.
double principal_angle_similarity(const OrthonormalBasis& U, const OrthonormalBasis& V);

/// Deflation by Q = I - B B^T: data rows (Q*X) or covariance (Q*S*Q).
Matrix project_out_data(const Matrix& X, const OrthonormalBasis& B);
Matrix project_out_covariance(const Matrix& S, const OrthonormalBasis& B);

/// Top-nu eigenvectors of P*P^T (PCA without mean subtraction).
OrthonormalBasis pca_no_mean(const Matrix& P, int nu);

/// Orthonormal basis of the orthogonal complement of span(B).
OrthonormalBasis complement_basis(const OrthonormalBasis& B);

/// splitmix64-style seed derivation for independent substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// dim x cols matrix of iid standard normals, filled row-major.
Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed);

}  // namespace cspx
