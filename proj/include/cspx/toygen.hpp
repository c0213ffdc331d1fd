#pragma once

#include <cstdint>
#include <vector>

#include "cspx/datamodel.hpp"
#include "cspx/numerics.hpp"

namespace cspx {

/// Mixing-model parameters: x = A [s_dis; s_ndis] + B [s_stat; s_nstat].
struct ToySpec {
    int d_dis = 6;
    int d_ndis = 74;
    int d_stat = 75;
    int d_nstat = 5;
    double var_dis_c1 = 0.8;
    double var_dis_c2 = 0.1;
    double var_ndis = 0.1;
    double var_stat = 1.0;
    double var_nstat_train = 1.0;
    double var_nstat_test = 3.0;
    int trials_per_class = 100;
    int samples_per_trial = 100;

    int dim() const { return d_dis + d_ndis; }
    void check() const;
};

enum class PerturbTarget { A, B, Both, None };

struct PopulationSpec {
    int n_subjects = 5;
    double eta = 0.0;
    PerturbTarget perturb_target = PerturbTarget::A;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    std::vector<Matrix> A;  // per-subject mixing rotations
    std::vector<Matrix> B;
    Matrix gen_A;  // base antisymmetric generators (subject 1)
    Matrix gen_B;
    int d_dis = 6;
    int d_nstat = 5;

    OrthonormalBasis true_discriminative(int subject) const;  // A_i * span{e_1..e_d_dis}
    OrthonormalBasis true_nonstationary(int subject) const;   // B_i * span{last d_nstat axes}
};

struct Population {
    std::vector<SubjectRecord> subjects;
    GroundTruth truth;
};

TrialSet gen_subject_session(const ToySpec& spec, const Matrix& A, const Matrix& B,
                             bool test_session, std::uint64_t seed);

/// Subject 1 gets the base rotations; the designated matrix of every other
/// subject is a shared eta-perturbation of the base generator.
Population gen_population(const ToySpec& spec, const PopulationSpec& pop);

}  // namespace cspx
