// Command-line experiment runner for the erasure-coded CG solver.
//
// Subcommands:
//   solve       one run with explicit inputs (optional fault-plan/rhs files)
//   experiment  one protocol run (samples the fault plan from the seed)
//   table       (k, seed) sweep with per-k medians
//   check       property checks on a given matrix
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 unrecoverable fault set.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eccg/eccg.hpp"

namespace {

using namespace eccg;

struct CommonFlags {
    std::string matrix;
    std::optional<std::size_t> k;
    std::optional<double> k_frac;
    std::uint64_t seed = 1;
    double tol = 1e-10;
    double max_iter_mult = 10.0;
    bool no_recompute = false;
    std::optional<std::string> out_dir;
    std::optional<std::string> trace_path;
    std::optional<std::string> figure_path;
    bool save_encoding = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--matrix", flags.matrix,
                    "matrix source: 'ltridiag:N' or a Matrix Market file")
        ->required();
    cmd->add_option("--k", flags.k, "fault capacity as an absolute count");
    cmd->add_option("--k-frac", flags.k_frac, "fault capacity as a fraction of n")
        ->excludes("--k");
    cmd->add_option("--seed", flags.seed, "experiment seed (default 1)");
    cmd->add_option("--tol", flags.tol, "absolute residual tolerance (default 1e-10)");
    cmd->add_option("--max-iter-mult", flags.max_iter_mult,
                    "iteration cap as a multiple of n (default 10)");
    cmd->add_flag("--no-recompute", flags.no_recompute,
                  "skip the explicit residual recomputation at fault events");
    cmd->add_option("--out-dir", flags.out_dir, "directory for the full output set");
    cmd->add_option("--trace", flags.trace_path, "write the per-iteration trace CSV here");
    cmd->add_option("--figure", flags.figure_path, "write residual-vs-iteration CSV here");
    cmd->add_flag("--save-encoding", flags.save_encoding,
                  "persist the encoding matrix and augmented rhs next to the outputs")
        ->needs("--out-dir");
}

ExperimentConfig config_from_flags(const CommonFlags& flags) {
    ExperimentConfig config;
    config.matrix_source = flags.matrix;
    if (flags.k_frac)
        config.k_spec = KSpec::fraction(*flags.k_frac);
    else if (flags.k)
        config.k_spec = KSpec::absolute(*flags.k);
    config.seed = flags.seed;
    config.tol = flags.tol;
    config.max_iter_multiplier = flags.max_iter_mult;
    config.recompute_residual_on_fault = !flags.no_recompute;
    return config;
}

void write_requested_outputs(const RunResult& run, const CommonFlags& flags) {
    if (flags.out_dir) {
        OutputOptions options;
        options.save_encoding = flags.save_encoding;
        options.save_figure = flags.figure_path.has_value();
        write_run_outputs(run, *flags.out_dir, options);
    }
    if (flags.trace_path) {
        std::ofstream out(*flags.trace_path, std::ios::binary | std::ios::trunc);
        run.trace.write_csv(out);
        std::ofstream meta(*flags.trace_path + ".json", std::ios::binary | std::ios::trunc);
        meta << run.trace.termination_json().dump(2) << "\n";
    }
    if (flags.figure_path) {
        std::ofstream out(*flags.figure_path, std::ios::binary | std::ios::trunc);
        emit_figure_data(run.trace, out);
    }
}

void print_report(const RunResult& run) {
    std::cout << ExperimentReport::csv_header() << "\n" << run.report.csv_row() << "\n";
    std::cout << "termination=" << to_string(run.report.termination)
              << " faulty=" << run.report.faulty_count << "\n";
}

int run_solve_like(const CommonFlags& flags, const std::optional<std::string>& plan_file,
                   const std::optional<std::string>& rhs_file, bool sample_plan,
                   double fault_frac) {
    ExperimentConfig config = config_from_flags(flags);
    config.plan_file = plan_file;
    config.rhs_file = rhs_file;
    config.sample_plan = sample_plan;
    config.fault_fraction = fault_frac;
    const RunResult run = run_experiment(config);
    write_requested_outputs(run, flags);
    print_report(run);
    return 0;
}

std::vector<KSpec> parse_k_list(const std::string& text) {
    std::vector<KSpec> list;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) list.push_back(KSpec::parse(token));
    }
    return list;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> list;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) list.push_back(std::stoull(token));
    }
    return list;
}

int run_check(const std::string& matrix, std::size_t k_count, std::uint64_t seed) {
    const CsrMatrix a = [&] {
        if (matrix.rfind("ltridiag:", 0) == 0)
            return gen_ltridiag(std::stoull(matrix.substr(9)));
        std::ifstream in(matrix);
        if (!in) throw InvalidArgumentError("cannot open " + matrix);
        return parse_matrix_market(in);
    }();
    const std::size_t n = a.n_rows();
    if (k_count > n) throw InvalidArgumentError("k exceeds n");
    bool all_ok = true;
    auto line = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("%-28s %s  %s\n", name, ok ? "PASS" : "FAIL", detail.c_str());
        all_ok &= ok;
    };

    line("stored-symmetry", is_symmetric(a),
         "n=" + std::to_string(n) + " nnz=" + std::to_string(a.nnz()));

    Xoshiro256PlusPlus rng(seed);
    std::vector<double> x_true(n);
    for (double& v : x_true) v = rng.uniform_open();
    const IndexMask none(n);
    const std::vector<double> b = spmv_masked(a, x_true, none, none);
    const EncodedSystem sys = build_encoded_system(a, b, gen_gaussian_encoding(n, k_count, seed));
    const double scale = std::max(sys.max_abs(), 1.0);

    // null-space identity over every encoder column
    double null_worst = 0.0;
    std::vector<double> basis_col(n + k_count, 0.0);
    for (std::size_t c = 0; c < k_count; ++c) {
        for (std::size_t i = 0; i < n; ++i) basis_col[i] = sys.encoder()(i, c);
        for (std::size_t c2 = 0; c2 < k_count; ++c2)
            basis_col[n + c2] = c2 == c ? -1.0 : 0.0;
        for (double v : sys.apply(basis_col)) null_worst = std::max(null_worst, std::abs(v));
    }
    {
        std::ostringstream detail;
        detail << "max |A~ [E;-I]| = " << null_worst;
        line("null-space-identity", null_worst <= 1e-10 * scale, detail.str());
    }

    // quadratic-form nonnegativity on 1000 seeded vectors
    double quad_worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(n + k_count);
        for (double& x : v) x = rng.uniform() * 2.0 - 1.0;
        double vv = 0.0;
        for (double x : v) vv += x * x;
        double quad = 0.0;
        const auto image = sys.apply(v);
        for (std::size_t i = 0; i < v.size(); ++i) quad += v[i] * image[i];
        quad_worst = std::min(quad_worst, quad / (vv * scale));
    }
    {
        std::ostringstream detail;
        detail << "min v'Av / (v'v max|A~|) = " << quad_worst;
        line("quadratic-form-psd", quad_worst >= -1e-10, detail.str());
    }

    // operative rank of a protocol-sampled fault set
    if (k_count > 0) {
        const FaultPlan plan = sample_fault_plan(n, k_count, 0.25, seed);
        const bool ok = kruskal_rank_operative(sys.encoder(), plan.events()[0].victim_indices);
        line("operative-rank", ok,
             "sampled |F| = " + std::to_string(plan.events()[0].victim_indices.size()));
    }

    // dense spectrum at desk scale
    if (n + k_count <= 400) {
        const SpectrumDiagnostics diag = spectrum_diagnostics(sys);
        const double top = diag.augmented_eigenvalues.back();
        std::size_t zeros = 0;
        for (double lambda : diag.augmented_eigenvalues) zeros += std::abs(lambda) <= 1e-10 * top;
        std::ostringstream detail;
        detail << "zero-eigenvalues=" << zeros << " kappa_e=" << diag.kappa_e;
        line("spectrum", zeros == k_count && diag.interlace_lower_ok && diag.interlace_upper_ok,
             detail.str());
    } else {
        std::printf("%-28s SKIP  n + k beyond dense budget\n", "spectrum");
    }
    return all_ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"erasure-coded conjugate gradient experiment harness"};
    app.require_subcommand(1);

    CommonFlags solve_flags;
    std::optional<std::string> solve_plan, solve_rhs, solve_encoding;
    CLI::App* solve_cmd = app.add_subcommand("solve", "one run with explicit inputs");
    add_common_flags(solve_cmd, solve_flags);
    solve_cmd->add_option("--plan", solve_plan, "JSON fault plan to replay");
    solve_cmd->add_option("--rhs", solve_rhs, "Matrix Market array file with the rhs");

    CommonFlags exp_flags;
    double fault_frac = 0.25;
    std::optional<std::string> exp_rhs;
    CLI::App* exp_cmd = app.add_subcommand("experiment", "one protocol run");
    add_common_flags(exp_cmd, exp_flags);
    exp_cmd->add_option("--fault-frac", fault_frac,
                        "latest fault point as a fraction of n (default 0.25)");
    exp_cmd->add_option("--rhs", exp_rhs, "Matrix Market array file with the rhs");

    CommonFlags table_flags;
    std::string k_list_text = "0";
    std::string seeds_text = "1,2,3,4,5";
    double table_fault_frac = 0.25;
    CLI::App* table_cmd = app.add_subcommand("table", "(k, seed) sweep with medians");
    add_common_flags(table_cmd, table_flags);
    table_cmd->add_option("--k-list", k_list_text, "comma list of k values, e.g. '0,1,20%'");
    table_cmd->add_option("--seeds", seeds_text, "comma list of seeds (default 1..5)");
    table_cmd->add_option("--fault-frac", table_fault_frac,
                          "latest fault point as a fraction of n (default 0.25)");

    std::string check_matrix;
    std::size_t check_k = 0;
    std::uint64_t check_seed = 1;
    CLI::App* check_cmd = app.add_subcommand("check", "property checks on a matrix");
    check_cmd->add_option("--matrix", check_matrix, "matrix source")->required();
    check_cmd->add_option("--k", check_k, "fault capacity for the checks (default 0)");
    check_cmd->add_option("--seed", check_seed, "seed for the checks (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve_cmd->parsed()) {
            return run_solve_like(solve_flags, solve_plan, solve_rhs, /*sample_plan=*/false,
                                  0.25);
        }
        if (exp_cmd->parsed()) {
            return run_solve_like(exp_flags, std::nullopt, exp_rhs, /*sample_plan=*/true,
                                  fault_frac);
        }
        if (table_cmd->parsed()) {
            ExperimentConfig base = config_from_flags(table_flags);
            base.fault_fraction = table_fault_frac;
            const TableResult table =
                run_table(base, parse_k_list(k_list_text), parse_seed_list(seeds_text));
            std::cout << ExperimentReport::csv_header() << "\n";
            for (const ExperimentReport& row : table.rows) std::cout << row.csv_row() << "\n";
            std::cout << "matrix,k,median_iterations,median_raw_rel_residual\n";
            for (const TableMedianRow& row : table.medians) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.17g", row.median_raw_rel_residual);
                std::cout << row.matrix << ',' << row.k << ',' << row.median_iterations << ','
                          << buf << "\n";
            }
            if (table_flags.out_dir) write_table_outputs(table, *table_flags.out_dir);
            return 0;
        }
        if (check_cmd->parsed()) {
            return run_check(check_matrix, check_k, check_seed);
        }
    } catch (const UnrecoverableFaultError& e) {
        std::cerr << "unrecoverable fault set: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
