#include "cspx/datamodel.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cspx {

using json = nlohmann::json;

void TrialSet::check() const {
    if (channels <= 0 || samples <= 0)
        throw std::invalid_argument("TrialSet: channels and samples must be positive");
    if (labels.size() != trials.size())
        throw std::invalid_argument("TrialSet: labels length differs from trial count");
    for (size_t t = 0; t < trials.size(); ++t) {
        if (trials[t].rows() != channels || trials[t].cols() != samples)
            throw std::invalid_argument("TrialSet: trial " + std::to_string(t) +
                                        " has wrong shape");
        if (labels[t] != 1 && labels[t] != 2)
            throw std::invalid_argument("TrialSet: label must be 1 or 2");
    }
}

int TrialSet::count_class(int cls) const {
    int n = 0;
    for (int l : labels) n += (l == cls);
    return n;
}

namespace {

// Deterministic pairwise tree reduction of per-trial scatters.
Matrix pairwise_scatter_mean(const std::vector<const Matrix*>& trials, int samples) {
    struct Rec {
        static Matrix sum(const std::vector<const Matrix*>& t, size_t lo, size_t hi) {
            if (hi - lo == 1) return (*t[lo]) * t[lo]->transpose();
            size_t mid = lo + (hi - lo) / 2;
            return sum(t, lo, mid) + sum(t, mid, hi);
        }
    };
    Matrix s = Rec::sum(trials, 0, trials.size());
    s /= static_cast<double>(samples) * static_cast<double>(trials.size());
    return 0.5 * (s + s.transpose());
}

}  // namespace

CovarianceEstimate class_covariance(const TrialSet& ts, int cls) {
    ts.check();
    std::vector<const Matrix*> sel;
    for (size_t t = 0; t < ts.trials.size(); ++t)
        if (ts.labels[t] == cls) sel.push_back(&ts.trials[t]);
    if (sel.empty())
        throw std::invalid_argument("class_covariance: no trials of class " + std::to_string(cls));
    CovarianceEstimate out;
    out.matrix = pairwise_scatter_mean(sel, ts.samples);
    out.scope = (cls == 1) ? CovScope::Class1 : CovScope::Class2;
    return out;
}

CovarianceEstimate session_covariance(const TrialSet& ts) {
    ts.check();
    if (ts.trials.empty()) throw std::invalid_argument("session_covariance: empty trial set");
    std::vector<const Matrix*> sel;
    sel.reserve(ts.trials.size());
    for (const Matrix& t : ts.trials) sel.push_back(&t);
    CovarianceEstimate out;
    out.matrix = pairwise_scatter_mean(sel, ts.samples);
    out.scope = CovScope::Pooled;
    return out;
}

namespace {

void write_payload(const std::filesystem::path& file, const TrialSet& ts) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + file.string());
    for (const Matrix& trial : ts.trials) {
        // row-major C x T
        for (int i = 0; i < ts.channels; ++i)
            for (int j = 0; j < ts.samples; ++j) {
                double v = trial(i, j);
                os.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for " + file.string());
}

TrialSet read_payload(const std::filesystem::path& file, int channels, int samples,
                      const std::vector<int>& labels) {
    TrialSet ts;
    ts.channels = channels;
    ts.samples = samples;
    ts.labels = labels;
    std::ifstream is(file, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("load_dataset: cannot open payload " + file.string());
    auto bytes = static_cast<std::uint64_t>(is.tellg());
    std::uint64_t expected = static_cast<std::uint64_t>(labels.size()) * channels * samples *
                             sizeof(double);
    if (bytes < expected)
        throw std::runtime_error("load_dataset: truncated payload in " + file.string() + " (" +
                                 std::to_string(bytes) + " < " + std::to_string(expected) +
                                 " bytes)");
    if (bytes > expected)
        throw std::runtime_error("load_dataset: dimension mismatch for " + file.string() +
                                 " (payload larger than manifest declares)");
    is.seekg(0);
    ts.trials.reserve(labels.size());
    std::vector<double> buf(static_cast<size_t>(channels) * samples);
    for (size_t t = 0; t < labels.size(); ++t) {
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(double)));
        if (!is) throw std::runtime_error("load_dataset: truncated payload in " + file.string());
        Matrix m(channels, samples);
        for (int i = 0; i < channels; ++i)
            for (int j = 0; j < samples; ++j) m(i, j) = buf[static_cast<size_t>(i) * samples + j];
        ts.trials.push_back(std::move(m));
    }
    ts.check();
    return ts;
}

json session_manifest(const TrialSet& ts, const std::string& file) {
    return json{{"file", file},
                {"n_trials", ts.trials.size()},
                {"channels", ts.channels},
                {"samples", ts.samples},
                {"labels", ts.labels}};
}

}  // namespace

void save_dataset(const std::vector<SubjectRecord>& records, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json subjects = json::array();
    for (const SubjectRecord& rec : records) {
        rec.train.check();
        rec.test.check();
        if (rec.train.channels != rec.test.channels)
            throw std::invalid_argument("save_dataset: train/test channel mismatch for subject " +
                                        rec.subject_id);
        std::string train_file = rec.subject_id + "_train.f64";
        std::string test_file = rec.subject_id + "_test.f64";
        write_payload(dir / train_file, rec.train);
        write_payload(dir / test_file, rec.test);
        subjects.push_back(json{{"id", rec.subject_id},
                                {"train", session_manifest(rec.train, train_file)},
                                {"test", session_manifest(rec.test, test_file)}});
    }
    json manifest{{"format_version", 1}, {"subjects", subjects}};
    std::ofstream os(dir / "manifest.json");
    if (!os) throw std::runtime_error("save_dataset: cannot write manifest");
    os << manifest.dump(2) << "\n";
}

std::vector<SubjectRecord> load_dataset(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("load_dataset: missing manifest.json in " + dir.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("load_dataset: bad manifest: ") + e.what());
    }
    if (!manifest.contains("format_version") || manifest["format_version"] != 1)
        throw std::runtime_error("load_dataset: bad magic (unsupported format_version)");
    std::vector<SubjectRecord> records;
    for (const json& sub : manifest.at("subjects")) {
        SubjectRecord rec;
        rec.subject_id = sub.at("id").get<std::string>();
        for (const char* key : {"train", "test"}) {
            const json& sess = sub.at(key);
            auto labels = sess.at("labels").get<std::vector<int>>();
            if (labels.size() != sess.at("n_trials").get<size_t>())
                throw std::runtime_error("load_dataset: dimension mismatch (labels vs n_trials) "
                                         "for subject " + rec.subject_id);
            TrialSet ts = read_payload(dir / sess.at("file").get<std::string>(),
                                       sess.at("channels").get<int>(),
                                       sess.at("samples").get<int>(), labels);
            (std::string(key) == "train" ? rec.train : rec.test) = std::move(ts);
        }
        if (rec.train.channels != rec.test.channels)
            throw std::runtime_error("load_dataset: dimension mismatch (train/test channels) for "
                                     "subject " + rec.subject_id);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace cspx
