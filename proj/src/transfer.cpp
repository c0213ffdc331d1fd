#include "cspx/transfer.hpp"

#include <stdexcept>

#include <Eigen/QR>

namespace cspx {

Matrix covcsp_covariance(const Matrix& sigma_target, const std::vector<Matrix>& sigma_donors,
                         double lambda) {
    if (lambda < 0 || lambda > 1)
        throw std::invalid_argument("covcsp_covariance: lambda must be in [0, 1]");
    if (lambda == 0) return sigma_target;
    if (sigma_donors.empty())
        throw std::invalid_argument("covcsp_covariance: donors required when lambda > 0");
    Matrix mean = Matrix::Zero(sigma_target.rows(), sigma_target.cols());
    for (const Matrix& d : sigma_donors) {
        if (d.rows() != sigma_target.rows() || d.cols() != sigma_target.cols())
            throw std::invalid_argument("covcsp_covariance: donor dimension mismatch");
        mean += d;
    }
    mean /= static_cast<double>(sigma_donors.size());
    return (1 - lambda) * sigma_target + lambda * mean;
}

SpatialFilterBank covcsp_train_cov(const Matrix& s1, const Matrix& s2,
                                   const std::vector<Matrix>& donor_s1,
                                   const std::vector<Matrix>& donor_s2, double lambda, int m) {
    Matrix b1 = covcsp_covariance(s1, donor_s1, lambda);
    Matrix b2 = covcsp_covariance(s2, donor_s2, lambda);
    return csp_train(b1, b2, m);
}

SpatialFilterBank covcsp_train(const SubjectRecord& target,
                               const std::vector<SubjectRecord>& donors, double lambda, int m) {
    std::vector<Matrix> d1, d2;
    for (const SubjectRecord& d : donors) {
        d1.push_back(class_covariance(d.train, 1).matrix);
        d2.push_back(class_covariance(d.train, 2).matrix);
    }
    return covcsp_train_cov(class_covariance(target.train, 1).matrix,
                            class_covariance(target.train, 2).matrix, d1, d2, lambda, m);
}

NonstationaryDirections nonstationary_directions_cov(const Matrix& s_train, const Matrix& s_test,
                                                     int l, const std::string& subject_id) {
    int C = static_cast<int>(s_train.rows());
    if (l < 1 || l > C)
        throw std::invalid_argument("nonstationary_directions: l out of range");
    Matrix diff = s_train - s_test;
    EigenPairs ep = sym_eig(0.5 * (diff + diff.transpose()), EigOrder::DescendingAbsValue);
    NonstationaryDirections out;
    out.subject_id = subject_id;
    out.vectors = ep.vectors.leftCols(l);
    out.eigenvalues = ep.values.head(l);
    double scale = std::max(1.0, std::max(s_train.cwiseAbs().maxCoeff(),
                                          s_test.cwiseAbs().maxCoeff()));
    out.degenerate = ep.values.cwiseAbs().maxCoeff() <= 1e-10 * scale;
    return out;
}

NonstationaryDirections nonstationary_directions(const SubjectRecord& rec, int l) {
    return nonstationary_directions_cov(session_covariance(rec.train).matrix,
                                        session_covariance(rec.test).matrix, l, rec.subject_id);
}

OrthonormalBasis common_nonstationary_subspace(const std::vector<NonstationaryDirections>& dirs,
                                               int nu) {
    if (dirs.empty())
        throw std::invalid_argument("common_nonstationary_subspace: no donor directions");
    Eigen::Index total = 0;
    for (const auto& d : dirs) total += d.vectors.cols();
    if (nu < 1 || nu > total)
        throw std::invalid_argument("common_nonstationary_subspace: nu out of range");
    Matrix P(dirs.front().vectors.rows(), total);
    Eigen::Index col = 0;
    for (const auto& d : dirs) {
        P.middleCols(col, d.vectors.cols()) = d.vectors;
        col += d.vectors.cols();
    }
    return pca_no_mean(P, nu);
}

namespace {

int adaptive_l(const Vector& abs_desc_values, double threshold) {
    double total = abs_desc_values.cwiseAbs().sum();
    if (total <= 0) return 1;
    double cum = 0;
    for (Eigen::Index j = 0; j < abs_desc_values.size(); ++j) {
        cum += std::abs(abs_desc_values[j]);
        if (cum >= threshold * total) return static_cast<int>(j) + 1;
    }
    return static_cast<int>(abs_desc_values.size());
}

std::vector<NonstationaryDirections> donor_directions(const std::vector<SubjectRecord>& donors,
                                                      const SsCspConfig& cfg) {
    if (donors.empty()) throw std::invalid_argument("sscsp: donors required");
    std::vector<NonstationaryDirections> dirs;
    for (const SubjectRecord& d : donors) {
        int C = d.train.channels;
        if (cfg.adaptive_l_threshold) {
            NonstationaryDirections full = nonstationary_directions(d, C);
            int l = adaptive_l(full.eigenvalues, *cfg.adaptive_l_threshold);
            full.vectors = full.vectors.leftCols(l).eval();
            full.eigenvalues = full.eigenvalues.head(l).eval();
            dirs.push_back(std::move(full));
        } else {
            dirs.push_back(nonstationary_directions(d, std::min(cfg.l, C)));
        }
    }
    return dirs;
}

}  // namespace

SpatialFilterBank sscsp_train_basis(const Matrix& s1, const Matrix& s2,
                                    const OrthonormalBasis& p_nu, double lambda_penalty, int m) {
    if (p_nu.dim() == 0)
        return penalized_csp_train(s1, s2, Matrix::Zero(s1.rows(), s1.cols()), m);
    Matrix delta = lambda_penalty * (p_nu.columns * p_nu.columns.transpose());
    return penalized_csp_train(s1, s2, 0.5 * (delta + delta.transpose()), m);
}

SpatialFilterBank sscsp_train(const SubjectRecord& target, const std::vector<SubjectRecord>& donors,
                              const SsCspConfig& cfg, int m) {
    if (cfg.l < 1 || cfg.nu < 1) throw std::invalid_argument("sscsp_train: l and nu must be >= 1");
    std::vector<NonstationaryDirections> dirs = donor_directions(donors, cfg);
    OrthonormalBasis p_nu = common_nonstationary_subspace(dirs, cfg.nu);
    return sscsp_train_basis(class_covariance(target.train, 1).matrix,
                             class_covariance(target.train, 2).matrix, p_nu, cfg.lambda_penalty,
                             m);
}

OrthonormalBasis noise_only_subspace(const std::vector<SubjectRecord>& donors, int l, int nu,
                                     int m) {
    if (donors.empty()) throw std::invalid_argument("noise_only_subspace: donors required");
    std::vector<NonstationaryDirections> dirs;
    for (const SubjectRecord& d : donors) {
        Matrix s1 = class_covariance(d.train, 1).matrix;
        Matrix s2 = class_covariance(d.train, 2).matrix;
        SpatialFilterBank own = csp_train(s1, s2, m);
        Eigen::HouseholderQR<Matrix> qr(own.filters);
        Matrix Q = qr.householderQ() * Matrix::Identity(own.filters.rows(), own.filters.cols());
        OrthonormalBasis csp_span = OrthonormalBasis::from(Q);
        Matrix str = project_out_covariance(session_covariance(d.train).matrix, csp_span);
        Matrix ste = project_out_covariance(session_covariance(d.test).matrix, csp_span);
        dirs.push_back(nonstationary_directions_cov(str, ste, l, d.subject_id));
    }
    return common_nonstationary_subspace(dirs, nu);
}

SpatialFilterBank ss_mt_csp_train_cov(const std::vector<ClassCovPair>& subjects,
                                      const OrthonormalBasis& p_nu, const MtCspConfig& mt_cfg,
                                      int m) {
    if (subjects.empty()) throw std::invalid_argument("ss_mt_csp_train: no subjects");
    OrthonormalBasis Q = complement_basis(p_nu);
    if (Q.dim() < 2 * m)
        throw std::invalid_argument("ss_mt_csp_train: complement too small for 2m filters");
    std::vector<ClassCovPair> mapped;
    std::vector<SpatialFilterBank> init;
    for (const ClassCovPair& s : subjects) {
        ClassCovPair t;
        t.s1 = Q.columns.transpose() * s.s1 * Q.columns;
        t.s2 = Q.columns.transpose() * s.s2 * Q.columns;
        t.s1 = 0.5 * (t.s1 + t.s1.transpose()).eval();
        t.s2 = 0.5 * (t.s2 + t.s2.transpose()).eval();
        init.push_back(csp_train(t.s1, t.s2, m));
        mapped.push_back(std::move(t));
    }
    MtCspSolution sol = mtcsp_train(mapped, mt_cfg, m, init);
    SpatialFilterBank bank;
    bank.m = m;
    bank.filters = Q.columns * sol.per_subject.front().filters;  // exactly orthogonal to span(Pnu)
    bank.eigenvalues = sol.per_subject.front().eigenvalues;
    return bank;
}

SpatialFilterBank ss_mt_csp_train(const SubjectRecord& target,
                                  const std::vector<SubjectRecord>& donors,
                                  const SsCspConfig& ss_cfg, const MtCspConfig& mt_cfg, int m) {
    OrthonormalBasis p_nu = OrthonormalBasis::empty(target.train.channels);
    if (ss_cfg.nu > 0) {
        std::vector<NonstationaryDirections> dirs = donor_directions(donors, ss_cfg);
        p_nu = common_nonstationary_subspace(dirs, ss_cfg.nu);
    }
    std::vector<ClassCovPair> subjects;
    ClassCovPair t{class_covariance(target.train, 1).matrix,
                   class_covariance(target.train, 2).matrix};
    subjects.push_back(std::move(t));
    for (const SubjectRecord& d : donors)
        subjects.push_back(ClassCovPair{class_covariance(d.train, 1).matrix,
                                        class_covariance(d.train, 2).matrix});
    return ss_mt_csp_train_cov(subjects, p_nu, mt_cfg, m);
}

}  // namespace cspx
