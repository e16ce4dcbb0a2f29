#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eccg/csr.hpp"
#include "eccg/encoding.hpp"
#include "eccg/errors.hpp"
#include "eccg/fault.hpp"
#include "eccg/matrix_market.hpp"
#include "eccg/recovery.hpp"
#include "eccg/rng.hpp"
#include "eccg/solver.hpp"

// Experiment runner. Defaults reproduce the simulation protocol: the
// right-hand side is synthesized from a random solution in (0,1)^n, the
// encoder is Gaussian/sqrt(n), faults hit k random raw components at the end
// of one random iteration no later than 0.25n, the stopping criterion is
// ||r|| <= 1e-10, and the iteration cap is 10n. A (config, seed) pair fully
// determines every output byte.

namespace eccg {

/// Fault capacity specification: an absolute count or a fraction of n
/// (rounded down).
struct KSpec {
    bool is_fraction = false;
    double value = 0.0;

    static KSpec absolute(std::size_t k) { return {false, static_cast<double>(k)}; }
    static KSpec fraction(double f) { return {true, f}; }

    /// Accepts "12", "20%", or "0.2f".
    static KSpec parse(const std::string& text) {
        if (text.empty()) throw InvalidArgumentError("KSpec: empty specification");
        if (text.back() == '%') {
            const double pct = std::stod(text.substr(0, text.size() - 1));
            return fraction(pct / 100.0);
        }
        if (text.back() == 'f') return fraction(std::stod(text.substr(0, text.size() - 1)));
        if (text.find('.') != std::string::npos)
            throw InvalidArgumentError("KSpec: fractional k needs '%' or 'f' suffix: " + text);
        return absolute(static_cast<std::size_t>(std::stoull(text)));
    }

    std::size_t resolve(std::size_t n) const {
        if (!is_fraction) {
            if (value < 0.0) throw InvalidArgumentError("KSpec: negative k");
            return static_cast<std::size_t>(value);
        }
        if (value < 0.0 || value > 1.0)
            throw InvalidArgumentError("KSpec: fraction must lie in [0, 1]");
        return static_cast<std::size_t>(value * static_cast<double>(n));
    }
};

struct ExperimentConfig {
    std::string matrix_source;            // "ltridiag:N" or a Matrix Market path
    std::optional<std::string> matrix_name; // report label; derived when absent
    KSpec k_spec = KSpec::absolute(0);
    std::uint64_t seed = 1;
    double tol = 1e-10;
    double max_iter_multiplier = 10.0;    // cap = multiplier * n
    double fault_fraction = 0.25;         // fault point <= fraction * n
    bool recompute_residual_on_fault = true;
    std::optional<std::string> rhs_file;  // array-format vector; default synthesized
    std::optional<std::string> plan_file; // JSON fault plan; default sampled
    bool sample_plan = true;              // false: no faults unless plan_file given
};

struct ExperimentReport {
    std::string matrix;
    std::size_t n = 0;
    std::size_t nnz = 0;
    std::size_t k = 0;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iters;
    double raw_rel_residual = 0.0;
    bool residual_is_absolute = false;
    long long fault_point = -1; // -1 when no fault fired
    std::size_t faulty_count = 0;
    std::uint64_t seed = 0;

    static std::string csv_header() {
        return "matrix,n,k,seed,iterations,converged,raw_rel_residual,fault_point";
    }

    std::string csv_row() const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", raw_rel_residual);
        std::ostringstream out;
        out << matrix << ',' << n << ',' << k << ',' << seed << ',' << iterations << ','
            << (termination == Termination::converged ? 1 : 0) << ',' << buf << ','
            << fault_point;
        return out.str();
    }
};

struct RunResult {
    ExperimentReport report;
    SolveTrace trace;
    RecoveredSolution solution;
    FaultPlan plan;
    EncodedSystem system;
};

namespace detail {

inline std::string derive_matrix_name(const std::string& source) {
    if (source.rfind("ltridiag:", 0) == 0) {
        return "Ltridiag" + source.substr(std::string("ltridiag:").size());
    }
    std::filesystem::path p(source);
    return p.stem().string();
}

inline CsrMatrix load_matrix(const std::string& source) {
    if (source.rfind("ltridiag:", 0) == 0) {
        const std::string size_text = source.substr(std::string("ltridiag:").size());
        std::size_t n = 0;
        try {
            n = static_cast<std::size_t>(std::stoull(size_text));
        } catch (const std::exception&) {
            throw InvalidArgumentError("load_matrix: bad generator size: " + source);
        }
        return gen_ltridiag(n);
    }
    std::ifstream in(source);
    if (!in) throw InvalidArgumentError("load_matrix: cannot open " + source);
    return parse_matrix_market(in);
}

/// Sub-seeds derived from the experiment seed, in fixed order:
/// rhs synthesis, encoding, fault plan.
struct SubSeeds {
    std::uint64_t rhs;
    std::uint64_t encoding;
    std::uint64_t plan;
};

inline SubSeeds derive_sub_seeds(std::uint64_t seed) {
    SplitMix64 root(seed);
    SubSeeds s{};
    s.rhs = root.next();
    s.encoding = root.next();
    s.plan = root.next();
    return s;
}

} // namespace detail

/// One protocol run: load, synthesize, encode, fault, solve, recover.
inline RunResult run_experiment(const ExperimentConfig& config) {
    const CsrMatrix a = detail::load_matrix(config.matrix_source);
    const std::size_t n = a.n_rows();
    const std::size_t k = config.k_spec.resolve(n);
    if (k > n) throw InvalidArgumentError("run_experiment: k exceeds n");
    const detail::SubSeeds seeds = detail::derive_sub_seeds(config.seed);

    std::vector<double> b;
    if (config.rhs_file) {
        std::ifstream in(*config.rhs_file);
        if (!in) throw InvalidArgumentError("run_experiment: cannot open " + *config.rhs_file);
        b = read_matrix_market_vector(in);
        if (b.size() != n) throw DimensionError("run_experiment: rhs length mismatch");
    } else {
        // b = A x_true with x_true uniform in (0,1)^n
        Xoshiro256PlusPlus rng(seeds.rhs);
        std::vector<double> x_true(n);
        for (double& v : x_true) v = rng.uniform_open();
        const IndexMask none(n);
        b = spmv_masked(a, x_true, none, none);
    }

    EncodingMatrix e = gen_gaussian_encoding(n, k, seeds.encoding);
    EncodedSystem system = build_encoded_system(a, b, std::move(e));

    FaultPlan plan;
    if (config.plan_file) {
        std::ifstream in(*config.plan_file);
        if (!in) throw InvalidArgumentError("run_experiment: cannot open " + *config.plan_file);
        nlohmann::json j;
        in >> j;
        plan = FaultPlan::from_json(j);
    } else if (config.sample_plan && k > 0) {
        plan = sample_fault_plan(n, k, config.fault_fraction, seeds.plan);
    }

    const ProcessTopology topology = build_topology(n, k, ComponentGranularity{});

    SolverConfig solver_config;
    solver_config.tol_abs = config.tol;
    solver_config.max_iters = static_cast<std::size_t>(
        std::llround(config.max_iter_multiplier * static_cast<double>(n)));
    solver_config.recompute_residual_on_fault = config.recompute_residual_on_fault;

    SolveResult solved = solve(system, plan, topology, solver_config);
    if (solved.trace.termination == Termination::breakdown)
        throw NumericalError("run_experiment: solver breakdown");

    const RecoveredSolution solution =
        recover(system, solved.state, solved.fault_state, solved.trace.termination,
                /*allow_unconverged=*/true);

    RunResult result;
    result.report.matrix = config.matrix_name ? *config.matrix_name
                                              : detail::derive_matrix_name(config.matrix_source);
    result.report.n = n;
    result.report.nnz = a.nnz();
    result.report.k = k;
    result.report.iterations = solved.trace.iterations();
    result.report.termination = solved.trace.termination;
    result.report.raw_rel_residual = solution.raw_relative_residual;
    result.report.residual_is_absolute = solution.residual_is_absolute;
    result.report.faulty_count = solved.fault_state.faulty_count();
    result.report.seed = config.seed;
    result.report.fault_point = -1;
    for (const TraceRecord& rec : solved.trace.records) {
        if (rec.fault_event) {
            result.report.fault_point = static_cast<long long>(rec.iteration);
            break;
        }
    }
    result.trace = std::move(solved.trace);
    result.solution = solution;
    result.plan = std::move(plan);
    result.system = std::move(system);
    return result;
}

struct TableMedianRow {
    std::string matrix;
    std::size_t k = 0;
    std::size_t median_iterations = 0;
    double median_raw_rel_residual = 0.0;
};

struct TableResult {
    std::vector<ExperimentReport> rows;
    std::vector<TableMedianRow> medians;
};

namespace detail {

/// Lower median of a sorted copy (deterministic for even counts).
template <typename T>
T lower_median(std::vector<T> values) {
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

} // namespace detail

/// Runs the (k, seed) sweep of one table: one row per run plus per-k medians.
inline TableResult run_table(const ExperimentConfig& base, const std::vector<KSpec>& k_list,
                             const std::vector<std::uint64_t>& seeds) {
    TableResult table;
    for (const KSpec& k_spec : k_list) {
        std::vector<std::size_t> iters;
        std::vector<double> residuals;
        std::size_t k_resolved = 0;
        std::string matrix_label;
        for (std::uint64_t seed : seeds) {
            ExperimentConfig config = base;
            config.k_spec = k_spec;
            config.seed = seed;
            RunResult run = run_experiment(config);
            k_resolved = run.report.k;
            matrix_label = run.report.matrix;
            iters.push_back(run.report.iterations);
            residuals.push_back(run.report.raw_rel_residual);
            table.rows.push_back(std::move(run.report));
        }
        if (!iters.empty()) {
            table.medians.push_back({matrix_label, k_resolved,
                                     detail::lower_median(iters),
                                     detail::lower_median(residuals)});
        }
    }
    return table;
}

/// Residual-vs-iteration data for plotting: `iter,res_norm,fault_event`.
inline void emit_figure_data(const SolveTrace& trace, std::ostream& out) {
    out << "iter,res_norm,fault_event\n";
    char buf[32];
    for (const TraceRecord& rec : trace.records) {
        std::snprintf(buf, sizeof(buf), "%.17g", rec.residual_norm);
        out << rec.iteration << ',' << buf << ',' << (rec.fault_event ? 1 : 0) << '\n';
    }
}

namespace detail {

/// Writes via a temporary and renames, so partial files never appear.
template <typename WriteFn>
void write_file_atomic(const std::filesystem::path& path, WriteFn&& write) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        write(out);
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

struct OutputOptions {
    bool save_encoding = false;
    bool save_figure = false;
};

/// Writes report.csv, trace.csv, trace_meta.json, solution.json, and
/// x_star.mtx into out_dir (plus figure.csv and the encoding files when
/// requested). All writes are atomic per file.
inline void write_run_outputs(const RunResult& run, const std::filesystem::path& out_dir,
                              const OutputOptions& options = {}) {
    std::filesystem::create_directories(out_dir);
    detail::write_file_atomic(out_dir / "report.csv", [&](std::ostream& out) {
        out << ExperimentReport::csv_header() << '\n' << run.report.csv_row() << '\n';
    });
    detail::write_file_atomic(out_dir / "trace.csv",
                              [&](std::ostream& out) { run.trace.write_csv(out); });
    detail::write_file_atomic(out_dir / "trace_meta.json", [&](std::ostream& out) {
        out << run.trace.termination_json().dump(2) << '\n';
    });
    detail::write_file_atomic(out_dir / "solution.json", [&](std::ostream& out) {
        out << run.solution.to_json().dump(2) << '\n';
    });
    detail::write_file_atomic(out_dir / "x_star.mtx", [&](std::ostream& out) {
        write_matrix_market_vector(out, run.solution.x_star);
    });
    if (options.save_figure) {
        detail::write_file_atomic(out_dir / "figure.csv",
                                  [&](std::ostream& out) { emit_figure_data(run.trace, out); });
    }
    if (options.save_encoding) {
        detail::write_file_atomic(out_dir / "encoding.mtx", [&](std::ostream& out) {
            write_matrix_market_array(out, run.system.encoder().as_dense());
        });
        detail::write_file_atomic(out_dir / "rhs_augmented.mtx", [&](std::ostream& out) {
            write_matrix_market_vector(out, run.system.rhs_augmented());
        });
        detail::write_file_atomic(out_dir / "encoding.json", [&](std::ostream& out) {
            out << nlohmann::json{{"n", run.system.n()},
                                  {"k", run.system.k()},
                                  {"seed", run.system.encoder().seed()}}
                       .dump(2)
                << '\n';
        });
        detail::write_file_atomic(out_dir / "fault_plan.json", [&](std::ostream& out) {
            out << run.plan.to_json().dump(2) << '\n';
        });
    }
}

/// Writes the sweep rows and per-k medians next to each other.
inline void write_table_outputs(const TableResult& table, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    detail::write_file_atomic(out_dir / "table.csv", [&](std::ostream& out) {
        out << ExperimentReport::csv_header() << '\n';
        for (const ExperimentReport& row : table.rows) out << row.csv_row() << '\n';
    });
    detail::write_file_atomic(out_dir / "medians.csv", [&](std::ostream& out) {
        out << "matrix,k,median_iterations,median_raw_rel_residual\n";
        char buf[32];
        for (const TableMedianRow& row : table.medians) {
            std::snprintf(buf, sizeof(buf), "%.17g", row.median_raw_rel_residual);
            out << row.matrix << ',' << row.k << ',' << row.median_iterations << ',' << buf
                << '\n';
        }
    });
}

} // namespace eccg
