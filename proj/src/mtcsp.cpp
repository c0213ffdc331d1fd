#include "cspx/transfer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace cspx {

namespace {

// One subject's slot-local quantities. The filter is parameterized as
// w_i = A_i (w0 + z_i) with A_i = I - U_i U_i^T projecting onto the null space
// of the conjugacy constraints; redundant z-directions inside span(U_i) are
// pinned by the step matrix, so z_i may live in full R^C.
struct SubjectSlot {
    const Matrix* Sc = nullptr;
    const Matrix* Sp = nullptr;
    Matrix U;   // C x k orthonormal constraint span (k may be 0)
    Matrix A;   // I - U U^T
    Matrix P;   // U U^T
    Matrix XC;  // A Sc A
    Matrix XP;  // A Sp A
};

struct SlotResult {
    Vector w0;
    std::vector<Vector> ws;
    std::vector<double> trace;
};

double eval_objective(const std::vector<SubjectSlot>& subs, double lam1, double lam2,
                      const Vector& theta, int C) {
    int n = static_cast<int>(subs.size());
    double F = 0;
    Vector w0 = theta.head(C);
    for (int i = 0; i < n; ++i) {
        Vector z = theta.segment(C * (i + 1), C);
        Vector w = subs[i].A * (w0 + z);
        Vector v = w - w0;
        double num = w.dot(*subs[i].Sc * w);
        double den = w.dot(*subs[i].Sp * w) + lam1 * w0.squaredNorm() + lam2 * v.squaredNorm();
        if (den < 1e-300) return -std::numeric_limits<double>::infinity();
        F += num / den;
    }
    return F;
}

SlotResult extract_slot(const std::vector<SubjectSlot>& subs, double lam1, double lam2,
                        const std::vector<Vector>& winit, int max_iter, double tol) {
    int n = static_cast<int>(subs.size());
    int C = static_cast<int>(subs[0].A.rows());
    int d = C * (n + 1);

    // Feasible per-subject starting filters: projected inits, aligned in sign.
    std::vector<Vector> wp(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vector w = winit[static_cast<size_t>(i)];
        if (w.dot(winit[0]) < 0) w = -w;
        w = subs[i].A * w;
        double nw = w.norm();
        if (nw < 1e-10) {
            // init fully inside the constraint span; fall back to the freest axis
            Eigen::Index jmax = 0;
            subs[i].A.diagonal().maxCoeff(&jmax);
            w = subs[i].A.col(jmax);
            nw = w.norm();
            if (nw < 1e-10)
                throw std::invalid_argument("mtcsp_train: constraint projection rank loss");
        }
        wp[static_cast<size_t>(i)] = w / nw;
    }
    Vector w0m = Vector::Zero(C);
    for (const Vector& w : wp) w0m += w;
    w0m /= static_cast<double>(n);

    // Three init candidates: faithful split, global-style (v ~ 0), specific-style (w0 = 0).
    std::vector<Vector> cands;
    for (int c = 0; c < 3; ++c) {
        Vector th = Vector::Zero(d);
        if (c < 2) th.head(C) = w0m;
        for (int i = 0; i < n; ++i) {
            if (c == 0) th.segment(C * (i + 1), C) =
                subs[i].A * (wp[static_cast<size_t>(i)] - subs[i].A * w0m);
            if (c == 2) th.segment(C * (i + 1), C) = wp[static_cast<size_t>(i)];
        }
        th.normalize();
        cands.push_back(std::move(th));
    }
    Vector theta = cands[0];
    double F = eval_objective(subs, lam1, lam2, theta, C);
    for (int c = 1; c < 3; ++c) {
        double Fc = eval_objective(subs, lam1, lam2, cands[static_cast<size_t>(c)], C);
        if (Fc > F) {
            F = Fc;
            theta = cands[static_cast<size_t>(c)];
        }
    }
    if (!std::isfinite(F))
        throw std::runtime_error("mtcsp_train: non-finite objective at initialization");

    SlotResult res;
    res.trace.push_back(F);

    Vector g(d);
    Matrix W00(C, C);
    std::vector<Matrix> Bm(static_cast<size_t>(n)), Zm(static_cast<size_t>(n));

    for (int iter = 0; iter < max_iter; ++iter) {
        Vector w0 = theta.head(C);
        g.setZero();
        W00.setZero();
        for (int i = 0; i < n; ++i) {
            const SubjectSlot& s = subs[static_cast<size_t>(i)];
            Vector z = theta.segment(C * (i + 1), C);
            Vector w = s.A * (w0 + z);
            Vector v = w - w0;
            Vector Scw = *s.Sc * w;
            Vector Spw = *s.Sp * w;
            double num = w.dot(Scw);
            double den = w.dot(Spw) + lam1 * w0.squaredNorm() + lam2 * v.squaredNorm();
            if (!(den > 1e-300) || !std::isfinite(num)) {
                std::ostringstream os;
                os << "mtcsp_train: non-finite objective at iteration " << iter << " (trace size "
                   << res.trace.size() << ")";
                throw std::runtime_error(os.str());
            }
            double f = num / den;
            double q = 1.0 / den;

            Vector gN = 2.0 * (s.A * Scw);  // identical for the w0 and z_i blocks
            Vector gD0 = 2.0 * (s.A * Spw) + 2.0 * lam1 * w0 - 2.0 * lam2 * (s.P * v);
            Vector gDi = 2.0 * (s.A * Spw) + 2.0 * lam2 * (s.A * v);
            Vector gf0 = (gN - f * gD0) * q;
            Vector gfi = (gN - f * gDi) * q;
            g.head(C) += gf0;
            g.segment(C * (i + 1), C) = gfi;

            // Hessian blocks of f_i = N/D restricted to (w0, z_i)
            W00.noalias() += q * (2.0 * s.XC - f * (2.0 * s.XP)) -
                             (f * q) * (2.0 * lam1 * Matrix::Identity(C, C) + 2.0 * lam2 * s.P) -
                             q * (gf0 * gD0.transpose() + gD0 * gf0.transpose());
            Bm[static_cast<size_t>(i)] = q * (2.0 * s.XC - 2.0 * f * s.XP) -
                                         q * (gf0 * gDi.transpose() + gD0 * gfi.transpose());
            Zm[static_cast<size_t>(i)] = q * (2.0 * s.XC - f * (2.0 * s.XP + 2.0 * lam2 * s.A)) -
                                         q * (gfi * gDi.transpose() + gDi * gfi.transpose());
        }

        double mu = 1.0;
        mu = std::max(mu, W00.cwiseAbs().maxCoeff());
        for (int i = 0; i < n; ++i) {
            mu = std::max(mu, Bm[static_cast<size_t>(i)].cwiseAbs().maxCoeff());
            mu = std::max(mu, Zm[static_cast<size_t>(i)].cwiseAbs().maxCoeff());
        }
        // Levenberg floor: also bounds steps along the objective's flat scale
        // directions (each f_i is 0-homogeneous), which would otherwise let a
        // single subject's block drift to zero norm under warm starts.
        double tau = 1e-8 * mu;

        // Step matrix M = -H + mu * (pins + theta theta^T); the rank-one radial
        // term is applied via Sherman-Morrison on top of the arrow structure.
        Vector p(d);
        bool have_step = false;
        {
            std::vector<Eigen::LLT<Matrix>> llts;
            llts.reserve(static_cast<size_t>(n));
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
                Matrix Mz = -Zm[static_cast<size_t>(i)] + mu * subs[static_cast<size_t>(i)].P;
                Mz.diagonal().array() += tau;
                llts.emplace_back(Mz);
                ok = llts.back().info() == Eigen::Success;
            }
            if (ok) {
                Matrix S00 = -W00;
                S00.diagonal().array() += tau;
                for (int i = 0; i < n; ++i) {
                    Matrix M0i = -Bm[static_cast<size_t>(i)];
                    S00.noalias() -=
                        M0i * llts[static_cast<size_t>(i)].solve(M0i.transpose());
                }
                Eigen::LLT<Matrix> lltS(0.5 * (S00 + S00.transpose()));
                if (lltS.info() == Eigen::Success) {
                    auto arrow_solve = [&](const Vector& r) {
                        Vector t = r.head(C);
                        for (int i = 0; i < n; ++i) {
                            Matrix M0i = -Bm[static_cast<size_t>(i)];
                            t.noalias() -= M0i * llts[static_cast<size_t>(i)].solve(
                                                     r.segment(C * (i + 1), C));
                        }
                        Vector out(d);
                        out.head(C) = lltS.solve(t);
                        for (int i = 0; i < n; ++i) {
                            Matrix M0i = -Bm[static_cast<size_t>(i)];
                            out.segment(C * (i + 1), C) = llts[static_cast<size_t>(i)].solve(
                                r.segment(C * (i + 1), C) - M0i.transpose() * out.head(C));
                        }
                        return out;
                    };
                    Vector qg = arrow_solve(g);
                    Vector qt = arrow_solve(theta);
                    double denom = 1.0 + mu * theta.dot(qt);
                    if (std::abs(denom) > 1e-12) {
                        p = qg - (mu * theta.dot(qg) / denom) * qt;
                        have_step = true;
                    }
                }
            }
        }
        if (!have_step) {
            // saddle-free Newton: full dense eigendecomposition with |lambda| clamp
            Matrix M = Matrix::Zero(d, d);
            M.topLeftCorner(C, C) = -W00;
            for (int i = 0; i < n; ++i) {
                M.block(0, C * (i + 1), C, C) = -Bm[static_cast<size_t>(i)];
                M.block(C * (i + 1), 0, C, C) = -Bm[static_cast<size_t>(i)].transpose();
                M.block(C * (i + 1), C * (i + 1), C, C) =
                    -Zm[static_cast<size_t>(i)] + mu * subs[static_cast<size_t>(i)].P;
            }
            M.noalias() += mu * (theta * theta.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
            Vector lam = es.eigenvalues().cwiseAbs();
            double floor = 1e-8 * lam.maxCoeff();
            Vector coef = es.eigenvectors().transpose() * g;
            for (Eigen::Index j = 0; j < lam.size(); ++j)
                coef[j] /= std::max(lam[j], floor);
            p = es.eigenvectors() * coef;
        }

        double t = 1.0, F2 = F;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            F2 = eval_objective(subs, lam1, lam2, theta + t * p, C);
            if (F2 > F) {
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;

        theta += t * p;
        // hygiene: drop pinned redundant z-components, renormalize (both leave F invariant)
        for (int i = 0; i < n; ++i)
            theta.segment(C * (i + 1), C) =
                subs[static_cast<size_t>(i)].A * theta.segment(C * (i + 1), C);
        theta.normalize();
        // Once the global part is dead (lambda1 >> lambda2 regime), the
        // objective is 0-homogeneous in every z_i separately, so the block
        // scales are flat directions that can crawl toward zero while F gains
        // only rounding-scale increments. Rebalance the blocks to unit norm:
        // free when w0 = 0 exactly; when it costs a negligible amount (the
        // degenerate crawl), take the rebalance and stop.
        bool rebalance_stop = false;
        double bmin = std::numeric_limits<double>::infinity();
        std::vector<Vector> wcur(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            wcur[static_cast<size_t>(i)] = subs[static_cast<size_t>(i)].A *
                                           (theta.head(C) + theta.segment(C * (i + 1), C));
            bmin = std::min(bmin, wcur[static_cast<size_t>(i)].norm());
        }
        if (theta.head(C).norm() <= 1e-7 || bmin <= 1e-6) {
            Vector cand = Vector::Zero(d);
            bool ok = bmin > 1e-300;
            if (ok) {
                // keep each filter's direction w_i = A_i (w0 + z_i), reset its scale
                for (int i = 0; i < n; ++i)
                    cand.segment(C * (i + 1), C) = wcur[static_cast<size_t>(i)].normalized();
                cand.normalize();
                double Fc = eval_objective(subs, lam1, lam2, cand, C);
                if (Fc >= F2) {
                    theta = cand;
                    F2 = Fc;
                } else if (Fc >= F2 - 1e-4 * (1.0 + std::abs(F2))) {
                    theta = cand;
                    rebalance_stop = true;
                }
            }
            // hard stop before any filter can underflow the extraction
            // threshold: the remaining ascent along these near-flat scale
            // directions is bounded by rounding-scale increments.
            if (!rebalance_stop && bmin <= 1e-9) rebalance_stop = true;
        }
        double dF = F2 - F;
        F = std::max(F, F2);
        res.trace.push_back(F);
        if (rebalance_stop || dF < tol * (1.0 + std::abs(F))) break;
    }

    res.w0 = theta.head(C);
    for (int i = 0; i < n; ++i)
        res.ws.push_back(subs[static_cast<size_t>(i)].A *
                         (res.w0 + theta.segment(C * (i + 1), C)));
    return res;
}

}  // namespace

MtCspSolution mtcsp_train(const std::vector<ClassCovPair>& subjects, const MtCspConfig& cfg,
                          int m, const std::vector<SpatialFilterBank>& init) {
    if (subjects.empty()) throw std::invalid_argument("mtcsp_train: no subjects");
    if (cfg.lambda1 <= 0 || cfg.lambda2 <= 0)
        throw std::invalid_argument("mtcsp_train: lambda1 and lambda2 must be positive");
    if (init.size() != subjects.size())
        throw std::invalid_argument("mtcsp_train: need one init bank per subject");
    int n = static_cast<int>(subjects.size());
    int C = static_cast<int>(subjects[0].s1.rows());
    if (m < 1 || 2 * m > C) throw std::invalid_argument("mtcsp_train: bad m");
    for (const ClassCovPair& s : subjects)
        if (s.s1.rows() != C || s.s2.rows() != C)
            throw std::invalid_argument("mtcsp_train: subjects must share channel count");
    for (const SpatialFilterBank& b : init)
        if (b.filters.rows() != C || b.m < m)
            throw std::invalid_argument("mtcsp_train: init bank incompatible");

    std::vector<Matrix> Sp(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        Sp[static_cast<size_t>(i)] =
            spd_ridge(subjects[static_cast<size_t>(i)].s1 + subjects[static_cast<size_t>(i)].s2);

    MtCspSolution sol;
    sol.w0 = Matrix::Zero(C, 2 * m);
    sol.objective_traces.resize(static_cast<size_t>(2 * m));
    std::vector<Matrix> filters(static_cast<size_t>(n), Matrix::Zero(C, 2 * m));

    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::vector<Vector>> prev(static_cast<size_t>(n));
        for (int slot = 0; slot < m; ++slot) {
            int col = cls * m + slot;
            std::vector<SubjectSlot> subs(static_cast<size_t>(n));
            std::vector<Vector> winit(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                SubjectSlot& s = subs[static_cast<size_t>(i)];
                const ClassCovPair& cv = subjects[static_cast<size_t>(i)];
                s.Sc = (cls == 0) ? &cv.s1 : &cv.s2;
                s.Sp = &Sp[static_cast<size_t>(i)];
                const auto& pv = prev[static_cast<size_t>(i)];
                int k = static_cast<int>(pv.size());
                if (k > 0) {
                    Matrix Ci(C, k);
                    for (int j = 0; j < k; ++j)
                        Ci.col(j) = *s.Sc * pv[static_cast<size_t>(j)];
                    Eigen::HouseholderQR<Matrix> qr(Ci);
                    Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
                    for (int j = 0; j < k; ++j)
                        if (std::abs(R(j, j)) < 1e-10 * Ci.col(j).norm())
                            throw std::invalid_argument(
                                "mtcsp_train: constraint projection rank loss");
                    s.U = qr.householderQ() * Matrix::Identity(C, k);
                } else {
                    s.U = Matrix::Zero(C, 0);
                }
                s.P = s.U * s.U.transpose();
                s.A = Matrix::Identity(C, C) - s.P;
                s.XC = s.A * (*s.Sc) * s.A;
                s.XP = s.A * (*s.Sp) * s.A;
                s.XC = 0.5 * (s.XC + s.XC.transpose()).eval();
                s.XP = 0.5 * (s.XP + s.XP.transpose()).eval();
                winit[static_cast<size_t>(i)] = init[static_cast<size_t>(i)].filters.col(col);
            }
            SlotResult r = extract_slot(subs, cfg.lambda1, cfg.lambda2, winit,
                                        cfg.max_iterations, cfg.objective_tolerance);
            sol.w0.col(col) = r.w0;
            sol.objective_traces[static_cast<size_t>(col)] = std::move(r.trace);
            for (int i = 0; i < n; ++i) {
                Vector w = r.ws[static_cast<size_t>(i)];
                double nw = w.norm();
                if (nw < 1e-12) throw std::runtime_error("mtcsp_train: zero filter extracted");
                w /= nw;
                filters[static_cast<size_t>(i)].col(col) = w;
                prev[static_cast<size_t>(i)].push_back(w);
            }
        }
    }

    for (int i = 0; i < n; ++i) {
        SpatialFilterBank bank;
        bank.m = m;
        bank.filters = filters[static_cast<size_t>(i)];
        bank.eigenvalues.resize(2 * m);
        for (int col = 0; col < 2 * m; ++col) {
            const Matrix& Sc =
                (col < m) ? subjects[static_cast<size_t>(i)].s1 : subjects[static_cast<size_t>(i)].s2;
            Vector w = bank.filters.col(col);
            bank.eigenvalues[col] =
                w.dot(Sc * w) / w.dot(Sp[static_cast<size_t>(i)] * w);
        }
        sol.per_subject.push_back(std::move(bank));
    }
    return sol;
}

}  // namespace cspx
