#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cspx/classify.hpp"
#include "cspx/toygen.hpp"
#include "cspx/transfer.hpp"

namespace cspx {

enum class Method { Csp, CovCsp, MtCsp, SsCsp, SsMtCsp, SsCspNoiseOnly };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// Union of the per-method parameters; unused fields stay at their defaults.
struct MethodParams {
    double lambda = 0;            // covcsp
    double lambda1 = 0, lambda2 = 0;  // mtcsp
    int l = 0, nu = 0;            // sscsp
};

std::string params_string(Method method, const MethodParams& p);

/// Canonical parameter grid; n_pool is the donor-pool size available to the
/// smallest evaluation context (constrains nu <= l * n_pool for sscsp).
std::vector<MethodParams> default_grid(Method method, int n_pool);

/// Cached per-subject quantities shared across pipelines and grid points.
struct PreparedSubject {
    std::string id;
    Matrix s1, s2;          // train class covariances
    Matrix s_train, s_test; // pooled session covariances
    EigenPairs ns_diff;     // sym_eig(s_train - s_test, descending_abs_value)
    const TrialSet* train = nullptr;
    const TrialSet* test = nullptr;
};

PreparedSubject prepare_subject(const SubjectRecord& rec);

struct PipelineResult {
    double train_acc = 0;
    double test_acc = 0;
};

/// Train a filter bank for the given method/params (no classification step).
SpatialFilterBank train_method_bank(Method method, const PreparedSubject& target,
                                    const std::vector<const PreparedSubject*>& donors,
                                    const MethodParams& params, int m,
                                    std::vector<SpatialFilterBank>* mt_warm = nullptr);

/// Train filters per method, fit LDA on target training features, score both
/// sessions. mt_warm (optional) carries warm-start banks for mtcsp-family runs.
PipelineResult run_pipeline(Method method, const PreparedSubject& target,
                            const std::vector<const PreparedSubject*>& donors,
                            const MethodParams& params, int m,
                            std::vector<SpatialFilterBank>* mt_warm = nullptr);

/// Record-level convenience wrapper.
double run_pipeline(Method method, const SubjectRecord& target,
                    const std::vector<SubjectRecord>& donors, const MethodParams& params, int m);

/// Leave-one-subject-out parameter selection over the donor pool; the target's
/// own data is never touched. subjects[target_index] is the target.
MethodParams loso_select_params(Method method, const std::vector<PreparedSubject>& subjects,
                                int target_index, int m);

struct ResultRow {
    std::string subject;
    std::string method;
    std::string params;
    double train_acc = 0;
    double test_acc = 0;
    int repetition = 0;
    double eta = -1;  // toy sweeps only; < 0 means unset (not serialized to CSV)
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

struct ToyExperimentConfig {
    ToySpec toy;
    int n_subjects = 5;
    PerturbTarget perturb_target = PerturbTarget::A;
    std::vector<double> eta_grid = {0, 0.25, 0.5, 1, 2, 4};
    std::vector<Method> methods = {Method::Csp, Method::CovCsp, Method::MtCsp, Method::SsCsp};
    int m = 3;
    int repetitions = 50;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
};

struct RealExperimentConfig {
    std::filesystem::path dataset_dir;
    std::vector<Method> methods = {Method::Csp};
    int m = 3;
    std::filesystem::path output_dir;
};

/// Per repetition and eta: regenerate the population, LOSO-select per method,
/// evaluate subject 1. Rows carry "eta=..;" prefixed into params.
ResultTable run_toy_experiment(const ToyExperimentConfig& cfg);

/// Every subject takes a turn as target with the others as donors.
ResultTable run_real_experiment(const RealExperimentConfig& cfg);

std::string result_table_csv(const ResultTable& table);

/// Writes results.csv, summary.json (mean/median/std + p-value matrix) and,
/// when rows carry eta tags, per-eta error-rate quantiles (quantiles.csv).
void emit_report(const ResultTable& table, const std::filesystem::path& out_dir);

}  // namespace cspx
