#include "cspx/toygen.hpp"

#include <random>
#include <stdexcept>

namespace cspx {

void ToySpec::check() const {
    if (d_dis < 1 || d_ndis < 0 || d_stat < 0 || d_nstat < 1)
        throw std::invalid_argument("ToySpec: bad subspace dimensions");
    if (d_dis + d_ndis != d_stat + d_nstat)
        throw std::invalid_argument("ToySpec: d_dis + d_ndis must equal d_stat + d_nstat");
    for (double v : {var_dis_c1, var_dis_c2, var_ndis, var_stat, var_nstat_train, var_nstat_test})
        if (v <= 0) throw std::invalid_argument("ToySpec: variances must be positive");
    if (trials_per_class < 1 || samples_per_trial < 1)
        throw std::invalid_argument("ToySpec: trial counts must be positive");
}

TrialSet gen_subject_session(const ToySpec& spec, const Matrix& A, const Matrix& B,
                             bool test_session, std::uint64_t seed) {
    spec.check();
    int C = spec.dim();
    if (A.rows() != C || A.cols() != C || B.rows() != C || B.cols() != C)
        throw std::invalid_argument("gen_subject_session: mixing matrix dimension mismatch");

    TrialSet ts;
    ts.channels = C;
    ts.samples = spec.samples_per_trial;
    int n_trials = 2 * spec.trials_per_class;
    ts.trials.reserve(static_cast<size_t>(n_trials));
    ts.labels.reserve(static_cast<size_t>(n_trials));

    double sd_nstat = std::sqrt(test_session ? spec.var_nstat_test : spec.var_nstat_train);
    double sd_stat = std::sqrt(spec.var_stat);
    double sd_ndis = std::sqrt(spec.var_ndis);

    Matrix Sa(C, spec.samples_per_trial), Sb(C, spec.samples_per_trial);
    for (int t = 0; t < n_trials; ++t) {
        int cls = 1 + (t % 2);  // alternating, balanced
        double sd_dis = std::sqrt(cls == 1 ? spec.var_dis_c1 : spec.var_dis_c2);
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int i = 0; i < C; ++i) {
            double sd = (i < spec.d_dis) ? sd_dis : sd_ndis;
            for (int j = 0; j < spec.samples_per_trial; ++j) Sa(i, j) = sd * nd(rng);
        }
        for (int i = 0; i < C; ++i) {
            double sd = (i < spec.d_stat) ? sd_stat : sd_nstat;
            for (int j = 0; j < spec.samples_per_trial; ++j) Sb(i, j) = sd * nd(rng);
        }
        ts.trials.push_back(A * Sa + B * Sb);
        ts.labels.push_back(cls);
    }
    return ts;
}

OrthonormalBasis GroundTruth::true_discriminative(int subject) const {
    return OrthonormalBasis::from(A.at(static_cast<size_t>(subject)).leftCols(d_dis));
}

OrthonormalBasis GroundTruth::true_nonstationary(int subject) const {
    return OrthonormalBasis::from(B.at(static_cast<size_t>(subject)).rightCols(d_nstat));
}

Population gen_population(const ToySpec& spec, const PopulationSpec& pop) {
    spec.check();
    if (pop.n_subjects < 1) throw std::invalid_argument("gen_population: n_subjects must be >= 1");
    int C = spec.dim();

    RotationSample base_a = rand_rotation(C, derive_seed(pop.seed, 1));
    RotationSample base_b = rand_rotation(C, derive_seed(pop.seed, 2));

    bool perturb_a = pop.perturb_target == PerturbTarget::A || pop.perturb_target == PerturbTarget::Both;
    bool perturb_b = pop.perturb_target == PerturbTarget::B || pop.perturb_target == PerturbTarget::Both;
    // All non-reference subjects share one perturbed mixing matrix, mirroring
    // the single "A_2" of the generating model.
    Matrix A2 = perturb_a ? perturb_rotation(base_a.generator, pop.eta, derive_seed(pop.seed, 3))
                          : base_a.rotation;
    Matrix B2 = perturb_b ? perturb_rotation(base_b.generator, pop.eta, derive_seed(pop.seed, 4))
                          : base_b.rotation;

    Population out;
    out.truth.gen_A = base_a.generator;
    out.truth.gen_B = base_b.generator;
    out.truth.d_dis = spec.d_dis;
    out.truth.d_nstat = spec.d_nstat;
    for (int i = 0; i < pop.n_subjects; ++i) {
        const Matrix& Ai = (i == 0) ? base_a.rotation : A2;
        const Matrix& Bi = (i == 0) ? base_b.rotation : B2;
        out.truth.A.push_back(Ai);
        out.truth.B.push_back(Bi);
        SubjectRecord rec;
        rec.subject_id = "S" + std::to_string(i + 1);
        rec.train = gen_subject_session(spec, Ai, Bi, false,
                                        derive_seed(pop.seed, 100, static_cast<std::uint64_t>(i)));
        rec.test = gen_subject_session(spec, Ai, Bi, true,
                                       derive_seed(pop.seed, 200, static_cast<std::uint64_t>(i)));
        out.subjects.push_back(std::move(rec));
    }
    return out;
}

}  // namespace cspx
