#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cspx/numerics.hpp"

namespace cspx {

/// Labeled collection of channels x samples epochs for one session.
struct TrialSet {
    int channels = 0;
    int samples = 0;
    std::vector<Matrix> trials;
    std::vector<int> labels;  // 1 or 2 per trial

    void check() const;  // throws on invariant violation
    int count_class(int cls) const;
};

struct SubjectRecord {
    std::string subject_id;
    TrialSet train;
    TrialSet test;
};

enum class CovScope { Class1, Class2, Pooled };

struct CovarianceEstimate {
    Matrix matrix;
    CovScope scope = CovScope::Pooled;
    std::string session;
    std::string subject_id;
};

/// Mean over trials of class c of X X^T / T (deterministic pairwise summation).
CovarianceEstimate class_covariance(const TrialSet& ts, int cls);

/// Mean over all trials of X X^T / T.
CovarianceEstimate session_covariance(const TrialSet& ts);

/// Directory format: manifest.json + raw little-endian float64 payloads,
/// trials concatenated, each trial row-major C x T. Round-trip is bit-exact.
void save_dataset(const std::vector<SubjectRecord>& records, const std::filesystem::path& dir);
std::vector<SubjectRecord> load_dataset(const std::filesystem::path& dir);

}  // namespace cspx
