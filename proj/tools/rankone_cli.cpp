// Command-line front end: build rank-one families from height-set data, run
// the product-ergodicity and conservativity censuses, analyze the drift
// Markov shift, and cross-check the two descendant constructions.
//
// Exit codes: 0 success, 1 identity/assertion failure, 2 validation or
// resource error.

#include <rankone/certificates.hpp>
#include <rankone/descendants.hpp>
#include <rankone/heights.hpp>
#include <rankone/markov.hpp>
#include <rankone/tower.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace rankone;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write output file: " + out_path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

std::vector<int> parse_gamma_rule(const std::string& rule, int stages) {
    std::vector<int> seq;
    if (rule.rfind("constant:", 0) == 0) {
        const int c = std::stoi(rule.substr(9));
        seq.assign(static_cast<size_t>(stages), c);
    } else if (rule == "linear") {
        for (int k = 0; k < stages; ++k) seq.push_back(k + 1);
    } else if (rule == "powers-of-two") {
        int g = 2;
        for (int k = 0; k < stages; ++k) {
            seq.push_back(g);
            if (g > (1 << 28)) throw ValidationError("powers-of-two rule overflows at this depth");
            g *= 2;
        }
    } else {
        std::stringstream ss(rule);
        std::string item;
        while (std::getline(ss, item, ',')) seq.push_back(std::stoi(item));
        if (static_cast<int>(seq.size()) != stages)
            throw ValidationError("gamma list length does not match --stages");
    }
    return seq;
}

std::vector<long long> parse_ll_list(const std::string& s) {
    std::vector<long long> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
    return out;
}

struct BuildArgs {
    std::string gamma_rule;
    int stages = 0;
    std::string out_path;
    long long m_slack = 0;
};

int cmd_build(const BuildArgs& args) {
    const std::vector<int> seq = parse_gamma_rule(args.gamma_rule, args.stages);
    const RankOneSpec spec = build_family(seq, args.stages, int_from_ll(args.m_slack));
    if (!args.out_path.empty()) save_spec_file(spec, args.out_path);

    std::cout << "k,gamma_k,M_k,r_k,h_k_digits,obstruction_partial\n";
    Rat partial(1);
    for (int k = 0; k < spec.stage_count(); ++k) {
        const HeightSet& h = spec.height_sets[static_cast<size_t>(k)];
        partial *= make_rat(Int(4 * h.gamma - 1), Int(4 * h.gamma));
        const Int& hk = spec.column_height(k + 1);
        std::cout << k << ',' << h.gamma << ',' << to_string(h.M) << ',' << h.size() << ','
                  << mpz_sizeinbase(hk.get_mpz_t(), 10) << ','
                  << Int(partial.get_num()).get_str() << '/' << Int(partial.get_den()).get_str()
                  << '\n';
    }
    std::cout << "# obstruction product = " << Int(spec.obstruction_product.get_num()).get_str()
              << '/' << Int(spec.obstruction_product.get_den()).get_str() << " ~= "
              << fmt(spec.obstruction_product.get_d()) << '\n';
    return 0;
}

struct CertifyArgs {
    std::string kind;
    std::string spec_path;
    int i = 0;
    int jmax = -1;
    std::string b = "0";
    long long n = 1;
    std::string alphas = "1,-1";
    std::string bs = "0,0";
    CensusOptions opts;
    uint64_t sampled = 0;
    std::string out_path;
    std::string format = "csv";
};

int cmd_certify(const CertifyArgs& args) {
    const RankOneSpec spec = load_spec_file(args.spec_path);
    const int jmax = args.jmax < 0 ? spec.stage_count() : args.jmax;
    if (jmax <= args.i || jmax > spec.stage_count())
        throw ValidationError("certify: need i < jmax <= stage count");
    CensusOptions opts = args.opts;
    if (args.sampled > 0) opts.sample_count = args.sampled;

    std::vector<CertificateReport> reports;
    bool all_ok = true;
    for (int j = args.i + 1; j <= jmax; ++j) {
        CertificateReport rep;
        try {
            if (args.kind == "txt")
                rep = certify_txt(spec, args.i, j, int_from_string(args.b), opts);
            else if (args.kind == "u-obstruction")
                rep = certify_u_obstruction(spec, args.i, j, opts);
            else if (args.kind == "inverse-conservative")
                rep = certify_conservative_inverse(spec, args.i, j, args.n, opts);
            else if (args.kind == "general")
                rep = certify_general_product(spec, args.i, j, parse_ll_list(args.alphas),
                                              [&] {
                                                  std::vector<Int> bs;
                                                  for (long long v : parse_ll_list(args.bs))
                                                      bs.push_back(int_from_ll(v));
                                                  return bs;
                                              }(),
                                              opts);
            else
                throw ValidationError("unknown certificate kind: " + args.kind);
        } catch (const BudgetExceeded& e) {
            std::cerr << "budget exceeded at j=" << j << ": " << e.what() << '\n';
            return 2;
        }
        all_ok = all_ok && rep.bound_ok;
        reports.push_back(std::move(rep));
    }

    std::ostringstream body;
    if (args.format == "csv") {
        body << report_csv_header() << '\n';
        for (const auto& r : reports) body << report_csv_row(r) << '\n';
    } else {
        body << "[\n";
        for (size_t t = 0; t < reports.size(); ++t)
            body << report_json(reports[t]) << (t + 1 < reports.size() ? ",\n" : "\n");
        body << "]\n";
    }
    write_output(body.str(), args.out_path);
    return all_ok ? 0 : 1;
}

struct MarkovArgs {
    std::string sub;
    double epsilon = 0.5;
    int radius = 0;  // 0 = derive from steps
    int steps = 1000;
    int fold = 1;
    bool squared = false;
    std::string out_path;
    std::string format;
};

int cmd_markov(const MarkovArgs& args) {
    using namespace rankone::markov;
    if (args.sub == "stationary") {
        MarkovChainSpec spec{args.epsilon, args.radius > 0 ? args.radius : 500, false};
        const StationaryVector lam = stationary(spec);
        std::ostringstream body;
        if (args.format == "json") {
            nlohmann::json j;
            j["epsilon"] = spec.epsilon;
            j["radius"] = spec.radius;
            j["lambda_1"] = lam.at(1);
            j["max_residual"] = lam.max_residual;
            body << j.dump(2) << '\n';
        } else {
            stationary_csv(body, lam);
        }
        write_output(body.str(), args.out_path);
        return lam.max_residual < 1e-10 ? 0 : 1;
    }
    if (args.sub == "reversible") {
        MarkovChainSpec spec{args.epsilon, args.radius > 0 ? args.radius : 200, args.squared};
        const StationaryVector lam = stationary(spec);
        BandMatrix kernel = kernel_window(spec);
        if (spec.squared) kernel = band_multiply(kernel, kernel);
        const ReversibilityReport rep = check_reversible(kernel, lam);
        nlohmann::json j;
        j["epsilon"] = spec.epsilon;
        j["radius"] = spec.radius;
        j["squared"] = spec.squared;
        j["pass"] = rep.pass;
        j["max_rel_gap"] = rep.max_rel_gap;
        j["worst_i"] = rep.worst_i;
        j["worst_j"] = rep.worst_j;
        write_output(j.dump(2) + "\n", args.out_path);
        return rep.pass ? 0 : 1;
    }
    if (args.sub == "returns") {
        MarkovChainSpec spec{args.epsilon, args.radius > 0 ? args.radius : args.steps + 10, false};
        const ReturnSeries series = return_probabilities(spec, args.steps);
        std::ostringstream body;
        if (args.format == "json") {
            nlohmann::json j;
            j["epsilon"] = spec.epsilon;
            j["steps"] = args.steps;
            j["leaked_mass"] = series.leaked_mass;
            j["final_partial_sum"] = series.partial_sums.back();
            body << j.dump(2) << '\n';
        } else {
            returns_csv(body, series);
        }
        write_output(body.str(), args.out_path);
        return 0;
    }
    if (args.sub == "product-diagnostic") {
        MarkovChainSpec spec{args.epsilon, args.radius > 0 ? args.radius : 2 * args.steps + 10,
                             true};
        const ProductDiagnostic d =
            product_conservativity_diagnostic(spec, args.fold, args.steps);
        std::ostringstream body;
        if (args.format == "csv")
            diagnostic_csv(body, d);
        else
            body << diagnostic_json(d) << '\n';
        write_output(body.str(), args.out_path);
        return 0;
    }
    throw ValidationError("unknown markov subcommand: " + args.sub);
}

struct CrosscheckArgs {
    std::string spec_path;
    std::string csv_path;
    int max_stage = -1;
};

int cmd_crosscheck(const CrosscheckArgs& args) {
    const RankOneSpec spec = load_spec_file(args.spec_path);
    const int mx = args.max_stage < 0 ? spec.stage_count() : args.max_stage;
    if (mx > spec.stage_count()) throw ValidationError("crosscheck: stage out of range");
    for (int n = 1; n <= mx; ++n) {
        const Column col = build_column(spec, n);
        const DescendantTable table = descendant_table(spec, 0, n);
        if (col.descendant_heights.size() != table.values.size()) {
            std::cout << "stage " << n << ": FAIL (descendant count "
                      << col.descendant_heights.size() << " vs " << table.values.size() << ")\n";
            return 1;
        }
        for (size_t t = 0; t < table.values.size(); ++t)
            if (col.descendant_heights[t] != table.values[t]) {
                std::cout << "stage " << n << ": FAIL (first differing height "
                          << to_string(col.descendant_heights[t]) << " vs "
                          << to_string(table.values[t]) << " at index " << t << ")\n";
                return 1;
            }
        if (col.height != spec.column_height(n)) {
            std::cout << "stage " << n << ": FAIL (column height mismatch)\n";
            return 1;
        }
        std::cout << "stage " << n << ": OK (" << table.values.size() << " descendants)\n";
    }
    if (!args.csv_path.empty()) {
        std::ofstream out(args.csv_path);
        if (!out) throw ValidationError("cannot write CSV file: " + args.csv_path);
        column_csv(out, spec, mx);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank-one product ergodicity and conservativity toolkit"};
    app.require_subcommand(1);

    BuildArgs build_args;
    auto* build = app.add_subcommand("build", "construct a family and write its JSON spec");
    build->add_option("--gamma", build_args.gamma_rule,
                      "gamma rule: constant:<c> | linear | powers-of-two | explicit list a,b,c")
        ->required();
    build->add_option("--stages", build_args.stages, "number of stages")->required();
    build->add_option("--out", build_args.out_path, "spec JSON output path");
    build->add_option("--m-slack", build_args.m_slack,
                      "nonnegative extra added to every scheduled separation parameter");

    CertifyArgs cert_args;
    auto* certify = app.add_subcommand("certify", "run a pair/tuple census certificate");
    certify
        ->add_option("kind", cert_args.kind,
                     "txt | u-obstruction | inverse-conservative | general")
        ->required();
    certify->add_option("--spec", cert_args.spec_path, "spec JSON path")->required();
    certify->add_option("--i", cert_args.i, "base stage i");
    certify->add_option("--jmax", cert_args.jmax, "largest target stage (default: all)");
    certify->add_option("--b", cert_args.b, "level offset b (txt)");
    certify->add_option("--n", cert_args.n, "power n (inverse-conservative)");
    certify->add_option("--alphas", cert_args.alphas, "comma list of nonzero powers (general)");
    certify->add_option("--bs", cert_args.bs, "comma list of level offsets (general)");
    certify->add_option("--budget", cert_args.opts.pair_budget, "pair census guard");
    certify->add_option("--tuple-budget", cert_args.opts.tuple_budget, "tuple census guard");
    certify->add_option("--threads", cert_args.opts.threads, "worker threads (0 = hardware)");
    certify->add_option("--seed", cert_args.opts.seed, "seed for sampled mode");
    certify->add_option("--sampled", cert_args.sampled,
                        "sample this many pairs instead of the exact census (estimate)");
    certify->add_option("--out", cert_args.out_path, "report output path (default stdout)");
    certify->add_option("--format", cert_args.format, "csv | json");
    certify->add_flag("--timings", cert_args.opts.report_timing,
                      "emit measured elapsed_ms (off keeps outputs byte-reproducible)");

    MarkovArgs markov_args;
    auto* markov_cmd = app.add_subcommand("markov", "drift Markov shift diagnostics");
    markov_cmd
        ->add_option("sub", markov_args.sub,
                     "stationary | reversible | returns | product-diagnostic")
        ->required();
    markov_cmd->add_option("--epsilon", markov_args.epsilon, "drift parameter in [0, 1)");
    markov_cmd->add_option("--radius", markov_args.radius, "window radius (0 = derived)");
    markov_cmd->add_option("--steps", markov_args.steps, "number of steps");
    markov_cmd->add_option("--fold", markov_args.fold, "fold count k");
    markov_cmd->add_flag("--squared", markov_args.squared, "work with Q = P*P");
    markov_cmd->add_option("--out", markov_args.out_path, "output path (default stdout)");
    markov_cmd->add_option("--format", markov_args.format, "csv | json");

    CrosscheckArgs cross_args;
    auto* cross = app.add_subcommand(
        "crosscheck", "stacked-column heights against the direct-sum descendant values");
    cross->add_option("--spec", cross_args.spec_path, "spec JSON path")->required();
    cross->add_option("--csv", cross_args.csv_path, "also dump per-stage column CSV here");
    cross->add_option("--max-stage", cross_args.max_stage, "check stages 1..max");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (build->parsed()) return cmd_build(build_args);
        if (certify->parsed()) return cmd_certify(cert_args);
        if (markov_cmd->parsed()) return cmd_markov(markov_args);
        if (cross->parsed()) return cmd_crosscheck(cross_args);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return 2;
    } catch (const SpecViolation& e) {
        std::cerr << "spec violation: " << e.what() << '\n';
        return 1;
    } catch (const NotADescendant& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
