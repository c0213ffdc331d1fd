// cspx command-line interface: toy-data generation, experiment sweeps,
// subspace similarity reports, permutation tests, and pattern export.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cspx/harness.hpp"
#include "cspx/metrics.hpp"

using json = nlohmann::json;
using namespace cspx;

namespace {

PerturbTarget parse_perturb(const std::string& s) {
    if (s == "A") return PerturbTarget::A;
    if (s == "B") return PerturbTarget::B;
    if (s == "both") return PerturbTarget::Both;
    if (s == "none") return PerturbTarget::None;
    throw CLI::ValidationError("--perturb must be one of A|B|both|none");
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_method(item));
    }
    if (out.empty()) throw CLI::ValidationError("no methods given");
    return out;
}

void apply_toy_overrides(ToySpec& toy, const json& j) {
    if (j.contains("d_dis")) toy.d_dis = j["d_dis"];
    if (j.contains("d_ndis")) toy.d_ndis = j["d_ndis"];
    if (j.contains("d_stat")) toy.d_stat = j["d_stat"];
    if (j.contains("d_nstat")) toy.d_nstat = j["d_nstat"];
    if (j.contains("var_dis_c1")) toy.var_dis_c1 = j["var_dis_c1"];
    if (j.contains("var_dis_c2")) toy.var_dis_c2 = j["var_dis_c2"];
    if (j.contains("var_ndis")) toy.var_ndis = j["var_ndis"];
    if (j.contains("var_stat")) toy.var_stat = j["var_stat"];
    if (j.contains("var_nstat_train")) toy.var_nstat_train = j["var_nstat_train"];
    if (j.contains("var_nstat_test")) toy.var_nstat_test = j["var_nstat_test"];
    if (j.contains("trials_per_class")) toy.trials_per_class = j["trials_per_class"];
    if (j.contains("samples_per_trial")) toy.samples_per_trial = j["samples_per_trial"];
}

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    json j;
    is >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cspx: covariate-shift-robust spatial filtering toolkit"};
    app.require_subcommand(1);

    // gen-toy
    auto* gen = app.add_subcommand("gen-toy", "generate a synthetic population dataset");
    int gt_subjects = 5;
    double gt_eta = 0;
    std::string gt_perturb = "A", gt_out;
    std::uint64_t gt_seed = 0;
    gen->add_option("--subjects", gt_subjects, "number of subjects");
    gen->add_option("--eta", gt_eta, "perturbation strength");
    gen->add_option("--perturb", gt_perturb, "perturbed mixing matrix: A|B|both|none");
    gen->add_option("--seed", gt_seed, "random seed");
    gen->add_option("--out", gt_out, "output directory")->required();

    // run-toy
    auto* rt = app.add_subcommand("run-toy", "run the toy-data sweep");
    std::string rt_config, rt_out;
    int rt_reps = 0;
    rt->add_option("--config", rt_config, "experiment config JSON")->required();
    rt->add_option("--reps", rt_reps, "override repetition count");
    rt->add_option("--out", rt_out, "output directory")->required();

    // run
    auto* rr = app.add_subcommand("run", "run methods on a saved dataset");
    std::string rr_data, rr_methods, rr_config, rr_out;
    rr->add_option("--data", rr_data, "dataset directory")->required();
    rr->add_option("--methods", rr_methods, "comma-separated method list");
    rr->add_option("--config", rr_config, "experiment config JSON");
    rr->add_option("--out", rr_out, "output directory")->required();

    // similarity
    auto* sim = app.add_subcommand("similarity", "pairwise subspace similarity report");
    std::string sim_data, sim_kind = "discriminative";
    int sim_dim = 0;
    sim->add_option("--data", sim_data, "dataset directory")->required();
    sim->add_option("--kind", sim_kind, "discriminative|nonstationary");
    sim->add_option("--dim", sim_dim, "subspace dimension (default 6/5 by kind)");

    // permtest
    auto* pt = app.add_subcommand("permtest", "paired permutation test on a results CSV");
    std::string pt_results, pt_a, pt_b;
    pt->add_option("--results", pt_results, "results CSV path")->required();
    pt->add_option("--method-a", pt_a, "first method")->required();
    pt->add_option("--method-b", pt_b, "second method")->required();

    // export-patterns
    auto* ep = app.add_subcommand("export-patterns", "export spatial patterns as CSV");
    std::string ep_data, ep_method = "csp", ep_out;
    int ep_m = 3;
    ep->add_option("--data", ep_data, "dataset directory")->required();
    ep->add_option("--method", ep_method, "method to train");
    ep->add_option("--m", ep_m, "filters per class");
    ep->add_option("--out", ep_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ToySpec toy;
            PopulationSpec pop;
            pop.n_subjects = gt_subjects;
            pop.eta = gt_eta;
            pop.perturb_target = parse_perturb(gt_perturb);
            pop.seed = gt_seed;
            Population p = gen_population(toy, pop);
            save_dataset(p.subjects, gt_out);
            std::cout << "wrote " << p.subjects.size() << " subjects to " << gt_out << "\n";
        } else if (rt->parsed()) {
            json j = load_json(rt_config);
            ToyExperimentConfig cfg;
            if (j.contains("toy")) apply_toy_overrides(cfg.toy, j["toy"]);
            if (j.contains("subjects")) cfg.n_subjects = j["subjects"];
            if (j.contains("perturb"))
                cfg.perturb_target = parse_perturb(j["perturb"].get<std::string>());
            if (j.contains("eta_grid")) cfg.eta_grid = j["eta_grid"].get<std::vector<double>>();
            if (j.contains("methods")) {
                cfg.methods.clear();
                for (const auto& name : j["methods"])
                    cfg.methods.push_back(parse_method(name.get<std::string>()));
            }
            if (j.contains("m")) cfg.m = j["m"];
            if (j.contains("repetitions")) cfg.repetitions = j["repetitions"];
            if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
            if (rt_reps > 0) cfg.repetitions = rt_reps;
            cfg.output_dir = rt_out;
            ResultTable table = run_toy_experiment(cfg);
            std::cout << "wrote " << table.rows.size() << " rows to " << rt_out << "\n";
        } else if (rr->parsed()) {
            RealExperimentConfig cfg;
            cfg.dataset_dir = rr_data;
            cfg.output_dir = rr_out;
            if (!rr_config.empty()) {
                json j = load_json(rr_config);
                if (j.contains("methods")) {
                    cfg.methods.clear();
                    for (const auto& name : j["methods"])
                        cfg.methods.push_back(parse_method(name.get<std::string>()));
                }
                if (j.contains("m")) cfg.m = j["m"];
            }
            if (!rr_methods.empty()) cfg.methods = parse_methods(rr_methods);
            ResultTable table = run_real_experiment(cfg);
            std::cout << "wrote " << table.rows.size() << " rows to " << rr_out << "\n";
        } else if (sim->parsed()) {
            std::vector<SubjectRecord> records = load_dataset(sim_data);
            SubspaceKind kind;
            if (sim_kind == "discriminative") kind = SubspaceKind::Discriminative;
            else if (sim_kind == "nonstationary") kind = SubspaceKind::Nonstationary;
            else throw std::runtime_error("--kind must be discriminative or nonstationary");
            int d = sim_dim > 0 ? sim_dim : (kind == SubspaceKind::Discriminative ? 6 : 5);
            SimilarityReport rep = subject_similarity_report(records, kind, d);
            json out;
            out["kind"] = sim_kind;
            out["dimension"] = d;
            out["mean"] = rep.mean;
            json mat = json::array();
            for (Eigen::Index i = 0; i < rep.pairwise.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index k = 0; k < rep.pairwise.cols(); ++k)
                    row.push_back(rep.pairwise(i, k));
                mat.push_back(row);
            }
            out["pairwise"] = mat;
            json subjects = json::array();
            for (const SubjectRecord& r : records) subjects.push_back(r.subject_id);
            out["subjects"] = subjects;
            std::cout << out.dump(2) << "\n";
        } else if (pt->parsed()) {
            std::ifstream is(pt_results);
            if (!is) throw std::runtime_error("cannot open " + pt_results);
            std::string line;
            std::getline(is, line);  // header
            std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
            while (std::getline(is, line)) {
                std::stringstream ss(line);
                std::string subject, method, params, train, test, rep;
                std::getline(ss, subject, ',');
                std::getline(ss, method, ',');
                std::getline(ss, params, ',');
                std::getline(ss, train, ',');
                std::getline(ss, test, ',');
                std::getline(ss, rep, ',');
                auto& cell = acc[method][subject];
                cell.first += std::stod(test);
                cell.second += 1;
            }
            if (!acc.count(pt_a) || !acc.count(pt_b))
                throw std::runtime_error("method not found in results CSV");
            std::vector<double> va, vb;
            for (const auto& [subject, cell] : acc[pt_a]) {
                auto it = acc[pt_b].find(subject);
                if (it == acc[pt_b].end()) continue;
                va.push_back(cell.first / cell.second);
                vb.push_back(it->second.first / it->second.second);
            }
            PermutationTestResult res = paired_permutation_test(va, vb);
            json out{{"method_a", pt_a},
                     {"method_b", pt_b},
                     {"n_subjects", va.size()},
                     {"observed_mean_difference", res.observed_mean_difference},
                     {"p_value", res.p_value},
                     {"n_permutations", res.n_permutations},
                     {"exhaustive", res.exhaustive}};
            std::cout << out.dump(2) << "\n";
        } else if (ep->parsed()) {
            std::vector<SubjectRecord> records = load_dataset(ep_data);
            Method method = parse_method(ep_method);
            std::vector<PreparedSubject> prepared;
            for (const SubjectRecord& rec : records) prepared.push_back(prepare_subject(rec));
            std::ofstream os(ep_out, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + ep_out);
            os << "subject,filter,channel,pattern\n";
            for (size_t t = 0; t < prepared.size(); ++t) {
                std::vector<const PreparedSubject*> donors;
                for (size_t i = 0; i < prepared.size(); ++i)
                    if (i != t) donors.push_back(&prepared[i]);
                MethodParams params;
                if (method == Method::SsMtCsp) {
                    MethodParams ss = loso_select_params(Method::SsCsp, prepared, (int)t, ep_m);
                    MethodParams mt = loso_select_params(Method::MtCsp, prepared, (int)t, ep_m);
                    params.l = ss.l;
                    params.nu = ss.nu;
                    params.lambda1 = mt.lambda1;
                    params.lambda2 = mt.lambda2;
                } else if (method != Method::Csp) {
                    params = loso_select_params(method, prepared, (int)t, ep_m);
                }
                SpatialFilterBank bank =
                    train_method_bank(method, prepared[t], donors, params, ep_m);
                Matrix patterns =
                    compute_patterns(bank, 0.5 * (prepared[t].s1 + prepared[t].s2));
                for (Eigen::Index f = 0; f < patterns.cols(); ++f)
                    for (Eigen::Index c = 0; c < patterns.rows(); ++c) {
                        char buf[32];
                        std::snprintf(buf, sizeof(buf), "%.10g", patterns(c, f));
                        os << prepared[t].id << "," << f << "," << c << "," << buf << "\n";
                    }
            }
            std::cout << "wrote patterns to " << ep_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
