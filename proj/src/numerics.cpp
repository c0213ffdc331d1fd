#include "cspx/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace cspx {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_symmetric(const Matrix& S, const char* who) {
    require(S.rows() == S.cols(), std::string(who) + ": matrix not square");
    double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    double defect = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-10 * scale) {
        std::ostringstream os;
        os << who << ": matrix not symmetric (defect " << defect << ", scale " << scale << ")";
        throw std::invalid_argument(os.str());
    }
    require(S.allFinite(), std::string(who) + ": non-finite entries");
}

// Deterministic sign convention: largest-magnitude entry of each column positive.
void fix_signs(Matrix& V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        Eigen::Index idx = 0;
        V.col(j).cwiseAbs().maxCoeff(&idx);
        if (V(idx, j) < 0) V.col(j) = -V.col(j);
    }
}

}  // namespace

EigenPairs sym_eig(const Matrix& S, EigOrder order) {
    check_symmetric(S, "sym_eig");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig: eigensolver failed");
    const Vector& w = es.eigenvalues();  // ascending
    const Matrix& v = es.eigenvectors();

    std::vector<Eigen::Index> idx(static_cast<size_t>(w.size()));
    std::iota(idx.begin(), idx.end(), 0);
    if (order == EigOrder::DescendingValue) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return w[a] > w[b]; });
    } else {
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(w[a]) > std::abs(w[b]);
        });
    }
    EigenPairs out;
    out.values.resize(w.size());
    out.vectors.resize(v.rows(), v.cols());
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        out.values[j] = w[idx[static_cast<size_t>(j)]];
        out.vectors.col(j) = v.col(idx[static_cast<size_t>(j)]);
    }
    fix_signs(out.vectors);
    return out;
}

EigenPairs gen_sym_eig(const Matrix& A, const Matrix& B) {
    check_symmetric(A, "gen_sym_eig(A)");
    check_symmetric(B, "gen_sym_eig(B)");
    require(A.rows() == B.rows(), "gen_sym_eig: dimension mismatch");

    Eigen::SelfAdjointEigenSolver<Matrix> bs(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    double bmin = bs.eigenvalues().minCoeff();
    double thresh = 1e-12 * B.trace() / static_cast<double>(B.rows());
    if (bmin <= thresh) {
        std::ostringstream os;
        os << "gen_sym_eig: B not positive definite (smallest eigenvalue " << bmin << ")";
        throw std::invalid_argument(os.str());
    }

    Eigen::LLT<Matrix> llt(0.5 * (B + B.transpose()));
    if (llt.info() != Eigen::Success) throw std::runtime_error("gen_sym_eig: Cholesky failed");
    Matrix L = llt.matrixL();
    // C = L^-1 A L^-T, symmetric; whitened standard eigenproblem.
    Matrix C = L.triangularView<Eigen::Lower>().solve(A);
    C = L.triangularView<Eigen::Lower>().solve(C.transpose().eval());
    EigenPairs ep = sym_eig(0.5 * (C + C.transpose()), EigOrder::DescendingValue);
    Matrix W = L.transpose().triangularView<Eigen::Upper>().solve(ep.vectors);
    fix_signs(W);
    ep.vectors = W;  // B-orthonormal
    return ep;
}

Matrix spd_ridge(const Matrix& S) {
    check_symmetric(S, "spd_ridge");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
    double smin = es.eigenvalues().minCoeff();
    double scale = S.trace() / static_cast<double>(S.rows());
    if (smin > 1e-12 * scale) return S;
    return S + (1e-10 * scale) * Matrix::Identity(S.rows(), S.cols());
}

Matrix expm_antisym(const Matrix& M) {
    require(M.rows() == M.cols(), "expm_antisym: matrix not square");
    double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    double defect = (M + M.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-10 * scale)
        throw std::invalid_argument("expm_antisym: matrix not antisymmetric");
    return M.exp();
}

Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix G(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) G(i, j) = nd(rng);
    return G;
}

RotationSample rand_rotation(int dim, std::uint64_t seed) {
    require(dim >= 1, "rand_rotation: dim must be >= 1");
    Matrix G = gaussian_matrix(dim, dim, seed);
    RotationSample out;
    out.generator = 0.5 * (G - G.transpose());
    out.rotation = expm_antisym(out.generator);
    return out;
}

Matrix perturb_rotation(const Matrix& generator, double eta, std::uint64_t seed) {
    require(eta >= 0, "perturb_rotation: eta must be nonnegative");
    if (eta == 0.0) return expm_antisym(generator);
    Matrix Xi = gaussian_matrix(static_cast<int>(generator.rows()),
                                static_cast<int>(generator.cols()), seed);
    Matrix M2 = generator + eta * Xi;
    return expm_antisym(0.5 * (M2 - M2.transpose()));
}

OrthonormalBasis OrthonormalBasis::from(Matrix cols) {
    if (cols.cols() > 0) {
        Matrix G = cols.transpose() * cols;
        double defect = (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
        if (defect > 1e-8)
            throw std::invalid_argument("OrthonormalBasis: columns not orthonormal");
    }
    if (cols.cols() > cols.rows())
        throw std::invalid_argument("OrthonormalBasis: more columns than ambient dimension");
    OrthonormalBasis b;
    b.columns = std::move(cols);
    return b;
}

OrthonormalBasis OrthonormalBasis::empty(int ambient_dim) {
    OrthonormalBasis b;
    b.columns = Matrix::Zero(ambient_dim, 0);
    return b;
}

double principal_angle_similarity(const OrthonormalBasis& U, const OrthonormalBasis& V) {
    require(U.ambient_dim() == V.ambient_dim(), "principal_angle_similarity: ambient mismatch");
    int k = std::min(U.dim(), V.dim());
    if (k == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(U.columns.transpose() * V.columns);
    return svd.singularValues().head(k).squaredNorm() / static_cast<double>(k);
}

Matrix project_out_data(const Matrix& X, const OrthonormalBasis& B) {
    require(X.rows() == B.ambient_dim(), "project_out: ambient mismatch");
    if (B.dim() == 0) return X;
    return X - B.columns * (B.columns.transpose() * X);
}

Matrix project_out_covariance(const Matrix& S, const OrthonormalBasis& B) {
    check_symmetric(S, "project_out");
    require(S.rows() == B.ambient_dim(), "project_out: ambient mismatch");
    if (B.dim() == 0) return S;
    Matrix QS = S - B.columns * (B.columns.transpose() * S);
    Matrix out = QS - (QS * B.columns) * B.columns.transpose();
    return 0.5 * (out + out.transpose());
}

OrthonormalBasis pca_no_mean(const Matrix& P, int nu) {
    int max_nu = static_cast<int>(std::min(P.rows(), P.cols()));
    require(nu >= 1 && nu <= max_nu, "pca_no_mean: nu out of range");
    Matrix S = P * P.transpose();
    EigenPairs ep = sym_eig(0.5 * (S + S.transpose()), EigOrder::DescendingValue);
    return OrthonormalBasis::from(ep.vectors.leftCols(nu));
}

OrthonormalBasis complement_basis(const OrthonormalBasis& B) {
    int C = B.ambient_dim();
    int k = B.dim();
    if (k == 0) return OrthonormalBasis::from(Matrix::Identity(C, C));
    if (k == C) return OrthonormalBasis::empty(C);
    Eigen::HouseholderQR<Matrix> qr(B.columns);
    Matrix Q = qr.householderQ() * Matrix::Identity(C, C);
    Matrix comp = Q.rightCols(C - k);
    fix_signs(comp);
    return OrthonormalBasis::from(comp);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ b);
}

}  // namespace cspx
