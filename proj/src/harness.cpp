#include "cspx/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cspx/metrics.hpp"

namespace cspx {

using json = nlohmann::json;

std::string method_name(Method m) {
    switch (m) {
        case Method::Csp: return "csp";
        case Method::CovCsp: return "covcsp";
        case Method::MtCsp: return "mtcsp";
        case Method::SsCsp: return "sscsp";
        case Method::SsMtCsp: return "ss+mtcsp";
        case Method::SsCspNoiseOnly: return "sscsp-noise-only";
    }
    throw std::logic_error("method_name: unknown method");
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::Csp, Method::CovCsp, Method::MtCsp, Method::SsCsp, Method::SsMtCsp,
                     Method::SsCspNoiseOnly})
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method: " + name);
}

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string params_string(Method method, const MethodParams& p) {
    switch (method) {
        case Method::Csp: return "-";
        case Method::CovCsp: return "lambda=" + fmt_g(p.lambda);
        case Method::MtCsp:
            return "lambda1=" + fmt_g(p.lambda1) + ";lambda2=" + fmt_g(p.lambda2);
        case Method::SsCsp:
        case Method::SsCspNoiseOnly:
            return "l=" + std::to_string(p.l) + ";nu=" + std::to_string(p.nu);
        case Method::SsMtCsp:
            return "l=" + std::to_string(p.l) + ";nu=" + std::to_string(p.nu) +
                   ";lambda1=" + fmt_g(p.lambda1) + ";lambda2=" + fmt_g(p.lambda2);
    }
    throw std::logic_error("params_string: unknown method");
}

std::vector<MethodParams> default_grid(Method method, int n_pool) {
    std::vector<MethodParams> grid;
    switch (method) {
        case Method::Csp:
            grid.push_back(MethodParams{});
            break;
        case Method::CovCsp:
            for (double lam : {0.0, 1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                               0.8, 0.9, 1.0}) {
                MethodParams p;
                p.lambda = lam;
                grid.push_back(p);
            }
            break;
        case Method::MtCsp:
            for (int i = -4; i <= 4; ++i)
                for (int j = -4; j <= 4; ++j) {
                    MethodParams p;
                    p.lambda1 = std::pow(10.0, i);
                    p.lambda2 = std::pow(10.0, j);
                    grid.push_back(p);
                }
            break;
        case Method::SsCsp:
        case Method::SsCspNoiseOnly:
            for (int l = 1; l <= 8; ++l)
                for (int nu = 1; nu <= 10; ++nu) {
                    if (nu > l * n_pool) continue;
                    MethodParams p;
                    p.l = l;
                    p.nu = nu;
                    grid.push_back(p);
                }
            break;
        case Method::SsMtCsp:
            throw std::invalid_argument(
                "default_grid: ss+mtcsp reuses the sscsp and mtcsp selections");
    }
    if (grid.empty()) throw std::logic_error("default_grid: empty grid");
    return grid;
}

PreparedSubject prepare_subject(const SubjectRecord& rec) {
    PreparedSubject p;
    p.id = rec.subject_id;
    p.s1 = class_covariance(rec.train, 1).matrix;
    p.s2 = class_covariance(rec.train, 2).matrix;
    p.s_train = session_covariance(rec.train).matrix;
    p.s_test = session_covariance(rec.test).matrix;
    Matrix diff = p.s_train - p.s_test;
    p.ns_diff = sym_eig(0.5 * (diff + diff.transpose()), EigOrder::DescendingAbsValue);
    p.train = &rec.train;
    p.test = &rec.test;
    return p;
}

namespace {

OrthonormalBasis donor_pnu(const std::vector<const PreparedSubject*>& donors, int l, int nu) {
    std::vector<NonstationaryDirections> dirs;
    for (const PreparedSubject* d : donors) {
        NonstationaryDirections nd;
        nd.subject_id = d->id;
        nd.vectors = d->ns_diff.vectors.leftCols(l);
        nd.eigenvalues = d->ns_diff.values.head(l);
        dirs.push_back(std::move(nd));
    }
    return common_nonstationary_subspace(dirs, nu);
}

OrthonormalBasis donor_pnu_noise_only(const std::vector<const PreparedSubject*>& donors, int l,
                                      int nu, int m) {
    std::vector<NonstationaryDirections> dirs;
    for (const PreparedSubject* d : donors) {
        SpatialFilterBank own = csp_train(d->s1, d->s2, m);
        Eigen::HouseholderQR<Matrix> qr(own.filters);
        Matrix Q = qr.householderQ() * Matrix::Identity(own.filters.rows(), own.filters.cols());
        OrthonormalBasis span = OrthonormalBasis::from(Q);
        Matrix str = project_out_covariance(d->s_train, span);
        Matrix ste = project_out_covariance(d->s_test, span);
        dirs.push_back(nonstationary_directions_cov(str, ste, l, d->id));
    }
    return common_nonstationary_subspace(dirs, nu);
}

}  // namespace

SpatialFilterBank train_method_bank(Method method, const PreparedSubject& target,
                                    const std::vector<const PreparedSubject*>& donors,
                                    const MethodParams& params, int m,
                                    std::vector<SpatialFilterBank>* mt_warm) {
    bool needs_donors = method != Method::Csp;
    if (needs_donors && donors.empty())
        throw std::invalid_argument("run_pipeline: transfer method requires donors");
    switch (method) {
        case Method::Csp:
            return csp_train(target.s1, target.s2, m);
        case Method::CovCsp: {
            std::vector<Matrix> d1, d2;
            for (const PreparedSubject* d : donors) {
                d1.push_back(d->s1);
                d2.push_back(d->s2);
            }
            return covcsp_train_cov(target.s1, target.s2, d1, d2, params.lambda, m);
        }
        case Method::MtCsp: {
            std::vector<ClassCovPair> subjects;
            subjects.push_back(ClassCovPair{target.s1, target.s2});
            for (const PreparedSubject* d : donors)
                subjects.push_back(ClassCovPair{d->s1, d->s2});
            MtCspConfig cfg;
            cfg.lambda1 = params.lambda1;
            cfg.lambda2 = params.lambda2;
            std::vector<SpatialFilterBank> init;
            if (mt_warm && mt_warm->size() == subjects.size()) {
                init = *mt_warm;
            } else {
                for (const ClassCovPair& s : subjects) init.push_back(csp_train(s.s1, s.s2, m));
            }
            MtCspSolution sol = mtcsp_train(subjects, cfg, m, init);
            if (mt_warm) *mt_warm = sol.per_subject;
            return sol.per_subject.front();
        }
        case Method::SsCsp: {
            OrthonormalBasis pnu = donor_pnu(donors, params.l, params.nu);
            return sscsp_train_basis(target.s1, target.s2, pnu, 1e5, m);
        }
        case Method::SsCspNoiseOnly: {
            OrthonormalBasis pnu = donor_pnu_noise_only(donors, params.l, params.nu, m);
            return sscsp_train_basis(target.s1, target.s2, pnu, 1e5, m);
        }
        case Method::SsMtCsp: {
            OrthonormalBasis pnu = donor_pnu(donors, params.l, params.nu);
            std::vector<ClassCovPair> subjects;
            subjects.push_back(ClassCovPair{target.s1, target.s2});
            for (const PreparedSubject* d : donors)
                subjects.push_back(ClassCovPair{d->s1, d->s2});
            MtCspConfig cfg;
            cfg.lambda1 = params.lambda1;
            cfg.lambda2 = params.lambda2;
            return ss_mt_csp_train_cov(subjects, pnu, cfg, m);
        }
    }
    throw std::logic_error("train_method_bank: unknown method");
}

PipelineResult run_pipeline(Method method, const PreparedSubject& target,
                            const std::vector<const PreparedSubject*>& donors,
                            const MethodParams& params, int m,
                            std::vector<SpatialFilterBank>* mt_warm) {
    SpatialFilterBank bank = train_method_bank(method, target, donors, params, m, mt_warm);
    Matrix f_train = feature_matrix(bank, *target.train);
    LdaModel model = lda_train(f_train, target.train->labels);
    PipelineResult res;
    res.train_acc = accuracy(model, f_train, target.train->labels);
    res.test_acc = accuracy(model, feature_matrix(bank, *target.test), target.test->labels);
    return res;
}

double run_pipeline(Method method, const SubjectRecord& target,
                    const std::vector<SubjectRecord>& donors, const MethodParams& params, int m) {
    PreparedSubject t = prepare_subject(target);
    std::vector<PreparedSubject> d;
    for (const SubjectRecord& rec : donors) d.push_back(prepare_subject(rec));
    std::vector<const PreparedSubject*> dp;
    for (const PreparedSubject& p : d) dp.push_back(&p);
    return run_pipeline(method, t, dp, params, m).test_acc;
}

MethodParams loso_select_params(Method method, const std::vector<PreparedSubject>& subjects,
                                int target_index, int m) {
    if (method == Method::Csp) return MethodParams{};
    if (method == Method::SsMtCsp)
        throw std::invalid_argument("loso_select_params: compose ss+mtcsp from the individual "
                                    "sscsp and mtcsp selections");
    if (subjects.size() < 3)
        throw std::invalid_argument("loso_select_params: need >= 3 subjects");
    std::vector<int> donors;
    for (int i = 0; i < static_cast<int>(subjects.size()); ++i)
        if (i != target_index) donors.push_back(i);

    std::vector<MethodParams> grid = default_grid(method, static_cast<int>(donors.size()) - 1);
    std::vector<double> acc_sum(grid.size(), 0.0);

    if (method == Method::MtCsp) {
        // The joint mtCSP solve trains on {pseudo-target} ∪ pool, which is the
        // full donor set in every fold; only the evaluated subject differs.
        // Solve once per grid point and score each fold from the same solution.
        std::vector<ClassCovPair> subs;
        std::vector<SpatialFilterBank> init;
        for (int j : donors) {
            const PreparedSubject& s = subjects[static_cast<size_t>(j)];
            subs.push_back(ClassCovPair{s.s1, s.s2});
            init.push_back(csp_train(s.s1, s.s2, m));
        }
        for (size_t gidx = 0; gidx < grid.size(); ++gidx) {
            MtCspConfig cfg;
            cfg.lambda1 = grid[gidx].lambda1;
            cfg.lambda2 = grid[gidx].lambda2;
            // selection only ranks grid points; a looser tolerance than the
            // final training solve is ample for a stable ranking
            cfg.objective_tolerance = 1e-6;
            cfg.max_iterations = 50;
            MtCspSolution sol = mtcsp_train(subs, cfg, m, init);
            init = sol.per_subject;  // warm-start the next grid point
            for (size_t fj = 0; fj < donors.size(); ++fj) {
                const PreparedSubject& s = subjects[static_cast<size_t>(donors[fj])];
                const SpatialFilterBank& bank = sol.per_subject[fj];
                Matrix f_train = feature_matrix(bank, *s.train);
                LdaModel model = lda_train(f_train, s.train->labels);
                acc_sum[gidx] += accuracy(model, feature_matrix(bank, *s.test), s.test->labels);
            }
        }
        size_t best = 0;
        for (size_t gidx = 1; gidx < grid.size(); ++gidx)
            if (acc_sum[gidx] > acc_sum[best]) best = gidx;  // ties keep canonical order
        return grid[best];
    }

    for (int j : donors) {
        std::vector<const PreparedSubject*> pool;
        for (int k : donors)
            if (k != j) pool.push_back(&subjects[static_cast<size_t>(k)]);
        std::vector<SpatialFilterBank> warm;  // carried across grid points
        for (size_t gidx = 0; gidx < grid.size(); ++gidx) {
            PipelineResult r = run_pipeline(method, subjects[static_cast<size_t>(j)], pool,
                                            grid[gidx], m,
                                            method == Method::MtCsp ? &warm : nullptr);
            acc_sum[gidx] += r.test_acc;
        }
    }
    size_t best = 0;
    for (size_t gidx = 1; gidx < grid.size(); ++gidx)
        if (acc_sum[gidx] > acc_sum[best]) best = gidx;  // ties keep canonical order
    return grid[best];
}

namespace {

MethodParams select_with_cache(Method method, const std::vector<PreparedSubject>& subjects,
                               int target_index, int m,
                               std::map<Method, MethodParams>& cache) {
    if (method == Method::Csp) return MethodParams{};
    if (method == Method::SsMtCsp) {
        MethodParams ss = select_with_cache(Method::SsCsp, subjects, target_index, m, cache);
        MethodParams mt = select_with_cache(Method::MtCsp, subjects, target_index, m, cache);
        MethodParams p;
        p.l = ss.l;
        p.nu = ss.nu;
        p.lambda1 = mt.lambda1;
        p.lambda2 = mt.lambda2;
        return p;
    }
    auto it = cache.find(method);
    if (it != cache.end()) return it->second;
    MethodParams p = loso_select_params(method, subjects, target_index, m);
    cache.emplace(method, p);
    return p;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double pos = q * static_cast<double>(v.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1 - frac) + v[hi] * frac;
}

}  // namespace

ResultTable run_toy_experiment(const ToyExperimentConfig& cfg) {
    if (cfg.repetitions < 1)
        throw std::invalid_argument("run_toy_experiment: repetitions must be >= 1");
    if (cfg.eta_grid.empty()) throw std::invalid_argument("run_toy_experiment: empty eta grid");
    ResultTable table;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        for (double eta : cfg.eta_grid) {
            PopulationSpec pop;
            pop.n_subjects = cfg.n_subjects;
            pop.eta = eta;
            pop.perturb_target = cfg.perturb_target;
            pop.seed = cfg.seed + static_cast<std::uint64_t>(rep);
            Population population = gen_population(cfg.toy, pop);
            std::vector<PreparedSubject> prepared;
            for (const SubjectRecord& rec : population.subjects)
                prepared.push_back(prepare_subject(rec));
            std::vector<const PreparedSubject*> donors;
            for (size_t i = 1; i < prepared.size(); ++i) donors.push_back(&prepared[i]);

            std::map<Method, MethodParams> cache;
            for (Method method : cfg.methods) {
                MethodParams params = select_with_cache(method, prepared, 0, cfg.m, cache);
                PipelineResult r = run_pipeline(method, prepared[0], donors, params, cfg.m);
                ResultRow row;
                row.subject = prepared[0].id;
                row.method = method_name(method);
                std::string ps = params_string(method, params);
                row.params = "eta=" + fmt_g(eta) + (ps == "-" ? "" : ";" + ps);
                row.train_acc = r.train_acc;
                row.test_acc = r.test_acc;
                row.repetition = rep;
                row.eta = eta;
                table.rows.push_back(std::move(row));
            }
        }
    }
    if (!cfg.output_dir.empty()) emit_report(table, cfg.output_dir);
    return table;
}

ResultTable run_real_experiment(const RealExperimentConfig& cfg) {
    std::vector<SubjectRecord> records = load_dataset(cfg.dataset_dir);
    if (records.empty()) throw std::invalid_argument("run_real_experiment: empty dataset");
    std::vector<PreparedSubject> prepared;
    for (const SubjectRecord& rec : records) prepared.push_back(prepare_subject(rec));

    ResultTable table;
    for (size_t t = 0; t < prepared.size(); ++t) {
        std::map<Method, MethodParams> cache;
        std::vector<const PreparedSubject*> donors;
        for (size_t i = 0; i < prepared.size(); ++i)
            if (i != t) donors.push_back(&prepared[i]);
        for (Method method : cfg.methods) {
            try {
                MethodParams params =
                    select_with_cache(method, prepared, static_cast<int>(t), cfg.m, cache);
                PipelineResult r = run_pipeline(method, prepared[t], donors, params, cfg.m);
                ResultRow row;
                row.subject = prepared[t].id;
                row.method = method_name(method);
                row.params = params_string(method, params);
                row.train_acc = r.train_acc;
                row.test_acc = r.test_acc;
                row.repetition = 0;
                table.rows.push_back(std::move(row));
            } catch (const std::exception& e) {
                throw std::runtime_error("subject " + prepared[t].id + ", method " +
                                         method_name(method) + ": " + e.what());
            }
        }
    }
    if (!cfg.output_dir.empty()) emit_report(table, cfg.output_dir);
    return table;
}

std::string result_table_csv(const ResultTable& table) {
    std::ostringstream os;
    os << "subject,method,params,train_acc,test_acc,repetition\n";
    for (const ResultRow& r : table.rows)
        os << r.subject << "," << r.method << "," << r.params << "," << fmt_g(r.train_acc) << ","
           << fmt_g(r.test_acc) << "," << r.repetition << "\n";
    return os.str();
}

void emit_report(const ResultTable& table, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "results.csv", std::ios::binary);
        if (!os) throw std::runtime_error("emit_report: cannot write results.csv");
        os << result_table_csv(table);
    }

    // summary: per-method stats + pairwise permutation p-values over matched rows
    std::vector<std::string> methods;
    std::map<std::string, std::vector<double>> per_method;
    std::map<std::string, std::map<std::string, double>> keyed;  // method -> row key -> test_acc
    for (const ResultRow& r : table.rows) {
        if (!per_method.count(r.method)) methods.push_back(r.method);
        per_method[r.method].push_back(r.test_acc);
        keyed[r.method][r.subject + "|" + std::to_string(r.repetition) + "|" + fmt_g(r.eta)] =
            r.test_acc;
    }
    json summary;
    summary["methods"] = methods;
    for (const std::string& m : methods) {
        std::vector<double>& v = per_method[m];
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        summary["per_method"][m] = {{"mean", mean},
                                    {"median", quantile(v, 0.5)},
                                    {"std", std::sqrt(var)},
                                    {"n", v.size()}};
    }
    json pmat = json::array();
    for (const std::string& a : methods) {
        json row = json::array();
        for (const std::string& b : methods) {
            if (a == b) {
                row.push_back(nullptr);
                continue;
            }
            std::vector<double> va, vb;
            for (const auto& [key, acc] : keyed[a]) {
                auto it = keyed[b].find(key);
                if (it != keyed[b].end()) {
                    va.push_back(acc);
                    vb.push_back(it->second);
                }
            }
            if (va.empty()) {
                row.push_back(nullptr);
            } else {
                row.push_back(paired_permutation_test(va, vb).p_value);
            }
        }
        pmat.push_back(row);
    }
    summary["p_values"] = pmat;
    {
        std::ofstream os(out_dir / "summary.json", std::ios::binary);
        os << summary.dump(2) << "\n";
    }

    // per-eta error-rate quantiles for toy sweeps
    bool has_eta = false;
    for (const ResultRow& r : table.rows) has_eta = has_eta || r.eta >= 0;
    if (has_eta) {
        std::map<std::pair<double, std::string>, std::vector<double>> cells;
        for (const ResultRow& r : table.rows)
            if (r.eta >= 0) cells[{r.eta, r.method}].push_back(1.0 - r.test_acc);
        std::ofstream os(out_dir / "quantiles.csv", std::ios::binary);
        os << "eta,method,min,q25,median,q75,max\n";
        for (const auto& [key, errs] : cells) {
            os << fmt_g(key.first) << "," << key.second << "," << fmt_g(quantile(errs, 0.0)) << ","
               << fmt_g(quantile(errs, 0.25)) << "," << fmt_g(quantile(errs, 0.5)) << ","
               << fmt_g(quantile(errs, 0.75)) << "," << fmt_g(quantile(errs, 1.0)) << "\n";
        }
    }
}

}  // namespace cspx
