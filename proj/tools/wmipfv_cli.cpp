#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include <wmipfv/wmipfv.hpp>

using namespace wmipfv;
namespace fs = std::filesystem;

namespace {

struct VerifyFlags
{
    bool no_bp = false;
    std::optional<std::size_t> partitions;
    std::optional<std::string> heuristic;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> norm;
    std::optional<std::string> k;
    std::optional<std::string> mode;
    bool no_early_exit = false;
    bool json = false;
};

void add_verifier_flags(CLI::App* cmd, VerifyFlags& f)
{
    cmd->add_flag("--no-bp", f.no_bp, "Disable bound propagation");
    cmd->add_option("--partitions", f.partitions, "Number of partitions (power of two)");
    cmd->add_option("--heuristic", f.heuristic, "Partition ordering")->check(CLI::IsMember({"none", "random", "sampling"}));
    cmd->add_option("--seed", f.seed, "Seed for heuristics");
    cmd->add_option("--norm", f.norm, "Distance norm")->check(CLI::IsMember({"l1", "linf"}));
    cmd->add_option("--k", f.k, "Probability threshold (p/q or decimal)");
}

void apply(const VerifyFlags& f, VerifierOptions& o)
{
    if (f.no_bp)
        o.bound_propagation = false;
    if (f.partitions)
        o.partitions = *f.partitions;
    if (f.heuristic)
        o.heuristic = parse_heuristic(*f.heuristic);
    if (f.seed)
        o.seed = *f.seed;
    if (f.k)
        o.k = parse_rational(*f.k);
    if (f.no_early_exit)
        o.early_exit = false;
}

void print_counters(const Counters& c)
{
    std::cout << "assignments: " << c.assignments << "\n"
              << "integrations: " << c.integrations << "\n"
              << "search_nodes: " << c.search_nodes << "\n";
}

int run_wmi(const std::string& formula, const std::string& weight, const std::optional<std::string>& support,
            const std::optional<std::string>& query, bool oracle, std::size_t samples, std::uint64_t seed)
{
    SymbolTable symbols;
    Formula delta = parse_formula(formula, symbols);
    WeightDag w = parse_weight(weight, symbols);
    if (support)
        w = w.with_support(parse_formula(*support, symbols));
    if (Box sbox = bounds_from_precondition(delta, w.support()); sbox.bounded())
        check_nonnegative(w, sbox, 1000, seed);
    auto start = std::chrono::steady_clock::now();
    WmiResult r = wmi(delta, w);
    std::cout << "wmi: " << to_string(r.value) << "\n"
              << "wmi_float: " << to_double(r.value) << "\n"
              << "assignments: " << r.num_assignments << "\n"
              << "integrations: " << r.num_integrations << "\n";
    std::optional<Formula> gamma;
    if (query) {
        gamma = parse_formula(*query, symbols);
        std::cout << "probability: " << to_string(conditional_probability(*gamma, delta, w)) << "\n";
    }
    std::cout << "seconds: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << "\n";
    if (oracle) {
        Box box = bounds_from_precondition(delta, w.support());
        if (!box.bounded())
            throw UnboundedRegionError("oracle needs bounded variables");
        McEstimate e = gamma ? mc_probability(*gamma, delta, w, box, samples, seed) : mc_integrate(delta, w, box, samples, seed);
        std::cout << "oracle_mean: " << e.mean << "\n"
                  << "oracle_ci99: [" << e.lo << ", " << e.hi << "]\n"
                  << "oracle_agrees: " << (e.contains(to_double(gamma ? conditional_probability(*gamma, delta, w) : r.value)) ? "yes" : "no")
                  << "\n";
    }
    return 0;
}

int run_verify(const std::string& path, VerifyFlags flags)
{
    Json j = load_json(path);
    if (flags.norm) {
        if (!j.contains("property"))
            throw ParseError("task: missing field 'property'");
        j["property"]["norm"] = *flags.norm;
    }
    if (flags.mode) {
        j["verifier"]["mode"] = *flags.mode;
    }
    fs::path p(path);
    Task t = task_from_json(j, p.has_parent_path() ? p.parent_path() : fs::path("."));
    apply(flags, t.options);
    std::cout << "task: " << t.name << "\n"
              << "property: " << t.kind << "\n";
    if (t.parity) {
        auto start = std::chrono::steady_clock::now();
        ParityResult r = demographic_parity(t.parity->system, t.parity->minority, t.parity->prior, t.options.bound_propagation, t.options.wmi);
        bool passed = t.options.strict ? r.ratio > t.options.k : r.ratio >= t.options.k;
        std::cout << "parity_ratio: " << to_string(r.ratio) << "\n"
                  << "parity_ratio_float: " << to_double(r.ratio) << "\n"
                  << "minority_rate: " << to_string(r.minority_rate) << "\n"
                  << "majority_rate: " << to_string(r.majority_rate) << "\n"
                  << "verdict: " << (passed ? "pass" : "fail") << "\n"
                  << "seconds: " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << "\n";
        return 0;
    }
    if (t.mode == "classify") {
        RobustnessResult r = classify_robustness(t.property, t.options);
        std::cout << "class: " << to_string(r.cls) << "\n"
                  << "violation: " << to_string(r.violation) << (r.complete ? "" : " (lower bound)") << "\n"
                  << "violation_float: " << to_double(r.violation) << "\n"
                  << "z: " << to_string(r.z) << "\n"
                  << "partitions_solved: " << r.partitions_solved << "\n";
        print_counters(r.counters);
        std::cout << "seconds: " << r.seconds << "\n";
        return 0;
    }
    Verdict v = verify(t.property, t.options);
    std::cout << "verdict: " << (v.passed ? "pass" : "fail") << "\n"
              << "probability: " << to_string(v.probability) << (v.complete ? "" : " (lower bound)") << "\n"
              << "probability_float: " << to_double(v.probability) << "\n"
              << "k: " << to_string(t.options.k) << "\n"
              << "z: " << to_string(v.z) << "\n"
              << "partitions_solved: " << v.partitions_solved << "/" << v.partitions_total << "\n"
              << "conditions_used: " << v.conditions_used << "/" << v.conditions_requested << "\n";
    if (v.sampling_fallback)
        std::cout << "sampling_fallback: yes\n";
    print_counters(v.counters);
    std::cout << "seconds: " << v.seconds << "\n";
    return 0;
}

int run_train_det(const std::string& data_path, std::size_t n_min, std::size_t n_max, const std::vector<std::string>& columns,
                  const std::optional<std::string>& root, const std::string& out)
{
    Dataset d = load_csv(data_path);
    std::vector<std::size_t> idx;
    if (columns.empty()) {
        idx.resize(d.names.size());
        std::iota(idx.begin(), idx.end(), 0);
    } else {
        for (const auto& c : columns)
            idx.push_back(d.column(c));
    }
    std::vector<Variable> vars;
    DetTrainingOptions o{n_min, n_max, std::nullopt};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::string& name = d.names[idx[i]];
        vars.push_back(d.sorts[idx[i]] == Sort::boolean ? Variable::boolean(name) : Variable::real(name));
        if (root && name == *root)
            o.root_feature = i;
    }
    if (root && !o.root_feature)
        throw ParseError("--root-split column '" + *root + "' is not among the selected columns");
    DensityTree t = train_det(d.columns(idx), vars, o);
    std::string text = det_to_json(t).dump(2) + "\n";
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_file(out, text);
    std::cerr << "leaves: " << t.leaf_count() << "\n";
    return 0;
}

int run_gen_income(bool biased, std::size_t n_prior, std::size_t n_sys, std::size_t n_test, std::uint64_t seed, const std::string& dir)
{
    IncomeConfig cfg{biased, n_prior, n_sys, n_test, seed};
    IncomeData d = gen_income_data(cfg);
    fs::create_directories(dir);
    write_text_file(fs::path(dir) / "prior_train.csv", write_csv(d.prior_train));
    write_text_file(fs::path(dir) / "system_train.csv", write_csv(d.system_train));
    write_text_file(fs::path(dir) / "test.csv", write_csv(d.test));
    std::cout << "wrote " << dir << "/{prior_train,system_train,test}.csv\n";
    return 0;
}

int run_gen_bench(std::size_t n_inputs, std::size_t m, std::size_t n, std::uint64_t seed, const std::string& out,
                  const std::string& matrices)
{
    SyntheticBenchmark b = gen_synthetic_benchmark(n_inputs, m, n, seed);
    std::string csv = write_csv(b.data);
    if (out.empty() || out == "-")
        std::cout << csv;
    else
        write_text_file(out, csv);
    if (!matrices.empty())
        write_text_file(matrices, Json{{"m1", b.m1}, {"m2", b.m2}}.dump(2) + "\n");
    return 0;
}

int run_bench(const std::string& suite, const VerifyFlags& flags, std::size_t points, const std::vector<std::string>& eps_text,
              std::uint64_t seed, bool oracle, std::size_t oracle_samples, const std::string& out_dir)
{
    std::ostream& out = std::cout;
    if (suite == "robustness") {
        BenchmarkConfig cfg;
        cfg.seed = seed;
        BenchmarkModels b = build_benchmark(cfg);
        std::cerr << "nn accuracy " << b.nn_accuracy << ", forest accuracy " << b.forest_accuracy << "\n";
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            write_text_file(fs::path(out_dir) / "nn.json", nn_to_json(b.nn).dump(2) + "\n");
            write_text_file(fs::path(out_dir) / "forest.json", forest_to_json(b.forest).dump(2) + "\n");
            write_text_file(fs::path(out_dir) / "prior.json", det_to_json(b.prior_tree).dump(2) + "\n");
        }
        VerifierOptions o;
        o.k = Rational(1, 10);
        apply(flags, o);
        Norm norm = flags.norm ? parse_norm(*flags.norm) : Norm::linf;
        std::vector<Rational> eps;
        for (const auto& e : eps_text)
            eps.push_back(parse_rational(e));
        out << csv_header_robustness() << (oracle ? ",oracle_violation,oracle_lo,oracle_hi,oracle_agrees" : "") << "\n";
        std::vector<std::pair<std::string, SystemEncoding>> systems{{"nn", encode_relu_nn(b.nn, b.inputs)},
                                                                    {"rf", encode_rf_classifier(b.forest, b.inputs)}};
        for (const auto& [name, sys] : systems) {
            for (const auto& e : eps) {
                for (std::size_t i = 0; i < std::min(points, b.test.rows.size()); ++i) {
                    RobustnessRow row;
                    row.system = name;
                    row.point = i;
                    row.eps = e;
                    row.x0 = benchmark_point(b, i);
                    PropertyEncoding p = robustness_task(sys, row.x0, e, b.prior, norm);
                    row.c0 = decision_at(sys, row.x0);
                    row.result = classify_robustness(p, o);
                    out << csv_row(row);
                    if (oracle) {
                        Box box = bounds_from_precondition(p.delta_pre, p.prior.support());
                        McEstimate est = mc_probability(!p.delta_post, p.delta_pre, p.weight(), box, oracle_samples, seed + i);
                        out << "," << est.mean << "," << est.lo << "," << est.hi << ","
                            << (!row.result.complete ? "n/a" : est.contains(to_double(row.result.violation)) ? "yes" : "no");
                    }
                    out << "\n";
                }
            }
        }
        return 0;
    }
    if (suite == "partitions") {
        BenchmarkConfig cfg;
        cfg.seed = seed;
        cfg.hidden = {4, 4};
        BenchmarkModels b = build_benchmark(cfg);
        SystemEncoding sys = encode_relu_nn(b.nn, b.inputs);
        out << "point,n_p,heuristic,verdict,probability,sum_matches\n";
        for (std::size_t i = 0; i < std::min(points, b.test.rows.size()); ++i) {
            PropertyEncoding p = robustness_task(sys, benchmark_point(b, i), Rational(1, 10), b.prior);
            Rational whole = wmi(p.delta_pre && p.delta_post, p.weight()).value;
            for (std::size_t np : {1, 2, 4, 8, 16}) {
                for (Heuristic h : {Heuristic::none, Heuristic::random, Heuristic::sampling}) {
                    VerifierOptions o;
                    o.k = Rational(9, 10);
                    apply(flags, o);
                    o.partitions = np;
                    o.heuristic = h;
                    o.early_exit = false;
                    Verdict v = verify(p, o);
                    out << i << "," << np << "," << to_string(h) << "," << (v.passed ? "pass" : "fail") << "," << to_string(v.probability) << ","
                        << (v.mass == whole ? "yes" : "no") << "\n";
                }
            }
        }
        return 0;
    }
    if (suite == "income") {
        out << "seed,biased,accuracy,prior_leaves,parity,minority_rate,majority_rate,seconds\n";
        IncomeStudyOptions io;
        io.bound_propagation = !flags.no_bp;
        for (std::uint64_t s = seed; s < seed + std::max<std::size_t>(points, 1); ++s) {
            for (bool biased : {true, false}) {
                IncomeRun r = income_parity_run(biased, s, io);
                out << s << "," << (biased ? 1 : 0) << "," << r.accuracy << "," << r.prior_leaves << "," << to_double(r.parity.ratio) << ","
                    << to_double(r.parity.minority_rate) << "," << to_double(r.parity.majority_rate) << "," << r.seconds << "\n";
            }
        }
        return 0;
    }
    throw ParseError("unknown bench suite '" + suite + "' (expected robustness, partitions or income)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Probabilistic verification of ML systems by weighted model integration"};
    app.require_subcommand(1);

    std::string formula, weight;
    std::optional<std::string> support, query;
    bool oracle = false;
    std::size_t samples = 1000000;
    std::uint64_t oracle_seed = 0;
    auto* wmi_cmd = app.add_subcommand("wmi", "Compute WMI(formula, weight)");
    wmi_cmd->add_option("formula", formula, "SMT(LRA) formula as an s-expression")->required();
    wmi_cmd->add_option("weight", weight, "Weight as an s-expression")->required();
    wmi_cmd->add_option("--support", support, "Support formula of the weight");
    wmi_cmd->add_option("--query", query, "Also report P(query | formula)");
    wmi_cmd->add_flag("--oracle", oracle, "Cross-check against the Monte Carlo oracle");
    wmi_cmd->add_option("--samples", samples, "Oracle samples");
    wmi_cmd->add_option("--seed", oracle_seed, "Oracle seed");

    std::string task_path;
    VerifyFlags vflags;
    auto* verify_cmd = app.add_subcommand("verify", "Verify a task file");
    verify_cmd->add_option("task", task_path, "Task JSON file")->required()->check(CLI::ExistingFile);
    add_verifier_flags(verify_cmd, vflags);
    verify_cmd->add_option("--mode", vflags.mode, "verify or classify")->check(CLI::IsMember({"verify", "classify"}));
    verify_cmd->add_flag("--no-early-exit", vflags.no_early_exit, "Solve every partition");

    std::string data_path, det_out;
    std::size_t n_min = 1000, n_max = 2000;
    std::vector<std::string> columns;
    std::optional<std::string> root_split;
    auto* det_cmd = app.add_subcommand("train-det", "Train a density estimation tree on a CSV dataset");
    det_cmd->add_option("data", data_path, "CSV with a typed header")->required()->check(CLI::ExistingFile);
    det_cmd->add_option("--n-min", n_min, "Minimum rows per leaf");
    det_cmd->add_option("--n-max", n_max, "Leaves with more rows are split");
    det_cmd->add_option("--columns", columns, "Columns to model (default: all)")->delimiter(',');
    det_cmd->add_option("--root-split", root_split, "Boolean column the root splits on");
    det_cmd->add_option("-o,--output", det_out, "Output JSON (default: stdout)");

    bool biased = false;
    std::size_t n_prior = 10000, n_sys = 10000, n_test = 1000;
    std::uint64_t gen_seed = 0;
    std::string gen_dir = ".";
    auto* income_cmd = app.add_subcommand("gen-income", "Generate the income population datasets");
    income_cmd->add_flag("--biased", biased, "Apply the wage penalty to the protected group");
    income_cmd->add_option("--n-prior", n_prior, "Rows for the population model");
    income_cmd->add_option("--n-system", n_sys, "Rows for the classifier");
    income_cmd->add_option("--n-test", n_test, "Test rows");
    income_cmd->add_option("--seed", gen_seed, "Seed");
    income_cmd->add_option("-o,--out-dir", gen_dir, "Output directory");

    std::size_t bench_inputs = 3, bench_m = 10, bench_n = 10000;
    std::string bench_out, bench_matrices;
    auto* gb_cmd = app.add_subcommand("gen-bench", "Generate the synthetic benchmark dataset");
    gb_cmd->add_option("--inputs", bench_inputs, "Number of inputs N");
    gb_cmd->add_option("--m", bench_m, "Hidden width M of the ground truth");
    gb_cmd->add_option("--samples", bench_n, "Rows");
    gb_cmd->add_option("--seed", gen_seed, "Seed");
    gb_cmd->add_option("-o,--output", bench_out, "Output CSV (default: stdout)");
    gb_cmd->add_option("--matrices", bench_matrices, "Write M1 and M2 as JSON");

    std::string suite;
    VerifyFlags bflags;
    std::size_t points = 30;
    std::vector<std::string> eps{"1/20", "1/10"};
    std::uint64_t bench_seed = 0;
    bool bench_oracle = false;
    std::size_t oracle_samples = 100000;
    std::string models_dir;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite and print per-instance CSV");
    bench_cmd->add_option("suite", suite, "robustness, partitions or income")->required();
    bench_cmd->add_flag("--no-bp", bflags.no_bp, "Disable bound propagation");
    bench_cmd->add_option("--partitions", bflags.partitions, "Number of partitions");
    bench_cmd->add_option("--heuristic", bflags.heuristic, "Partition ordering")->check(CLI::IsMember({"none", "random", "sampling"}));
    bench_cmd->add_option("--norm", bflags.norm, "Distance norm")->check(CLI::IsMember({"l1", "linf"}));
    bench_cmd->add_option("--k", bflags.k, "Probability threshold");
    bench_cmd->add_option("--points", points, "Test points (income: number of seeds)");
    bench_cmd->add_option("--eps", eps, "Ball radii")->delimiter(',');
    bench_cmd->add_option("--seed", bench_seed, "Seed");
    bench_cmd->add_flag("--oracle", bench_oracle, "Add Monte Carlo cross-validation columns");
    bench_cmd->add_option("--oracle-samples", oracle_samples, "Oracle samples per instance");
    bench_cmd->add_option("--models-dir", models_dir, "Write the trained models here");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*wmi_cmd)
            return run_wmi(formula, weight, support, query, oracle, samples, oracle_seed);
        if (*verify_cmd)
            return run_verify(task_path, vflags);
        if (*det_cmd)
            return run_train_det(data_path, n_min, n_max, columns, root_split, det_out);
        if (*income_cmd)
            return run_gen_income(biased, n_prior, n_sys, n_test, gen_seed, gen_dir);
        if (*gb_cmd)
            return run_gen_bench(bench_inputs, bench_m, bench_n, gen_seed, bench_out, bench_matrices);
        if (*bench_cmd)
            return run_bench(suite, bflags, points, eps, bench_seed, bench_oracle, oracle_samples, models_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
