#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "polylin/cluster.hpp"

namespace polylin {

/// Invalid experiment configuration. The message names the violated rule.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class CastKind { Raw, Jacobi, GradientDescent };

std::string cast_name(CastKind c);
CastKind parse_cast(const std::string& name);

struct GeneratorSpec {
    std::size_t N = 8;
    double target_rho = 0.5;
    std::uint64_t seed = 1;
    CastKind cast = CastKind::Raw;
};

/// Text matrix files (see read_matrix). Q defaults to I, x0 to zero.
struct MatrixFiles {
    std::string A;
    std::string Q;
    std::string y;
    std::string x0;
};

/// Random system with spectral radius near target_rho, Q = I (raw), x0 = 0.
///   float raw:    symmetric random matrix scaled by its power-iteration
///                 estimate, so the estimate lands on target_rho
///   exact raw:    A = S D S^-1 with S = I + u v^T, max |D_ii| = target_rho,
///                 so rho(A) = target_rho exactly
///   jacobi:       M = diag(c)(I - A0) with A0 of zero diagonal; the Jacobi
///                 splitting of M returns A = A0 and Q = diag(c)^-1
///   gd:           M has N-1 mutually orthogonal rows r_i; lambda = 1 - rho,
///                 delta = rho / max |r_i|^2, so rho(A) = target_rho
/// The exact jacobi A0 is target_rho (s s^T - I)/(N - 1) for a random sign
/// vector s. The jacobi and gd casts need N >= 2.
template <Scalar S>
IterationSystem<S> generate_problem(const GeneratorSpec& spec);

template <Scalar S>
IterationSystem<S> load_problem(const MatrixFiles& files);

/// One grid point. K = 0 means "derive": P for the baseline, the recovery
/// threshold of (m, n/ell) for the coded strategies.
struct StrategyPoint {
    Strategy strategy = Strategy::Baseline;
    std::size_t m = 1;
    std::size_t n = 2;
    std::size_t ell = 1;
    std::size_t P = 1;
    std::size_t K = 0;

    friend bool operator==(const StrategyPoint&, const StrategyPoint&) = default;
};

/// Cartesian expansion of one strategy entry whose fields may be scalars or
/// arrays, e.g. {"strategy": "polylin", "m": [2, 3], "n": 2, "P": [6, 8]}.
std::vector<StrategyPoint> expand_strategy_entry(const nlohmann::json& entry);

enum class ReportFormat { Csv, Json };

ReportFormat parse_format(const std::string& name);

struct ExperimentConfig {
    std::optional<GeneratorSpec> generator = GeneratorSpec{};
    std::optional<MatrixFiles> files;
    std::vector<StrategyPoint> grid;
    double beta1 = 1.0;
    double beta2 = 0.001;
    double compute_rate = 1e-8;
    StragglerModel straggler;
    std::vector<std::uint64_t> seeds{1};
    Backend backend = Backend::ExactRational;
    PointScheme points = PointScheme::Default;
    bool pad = true;
    /// When set, every grid point runs the iteration count required for
    /// this error (rounded up so n/ell stays even) instead of its own n.
    std::optional<double> epsilon;
    std::string output;  ///< empty or "-" means stdout
    ReportFormat format = ReportFormat::Csv;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;

    /// Checks every grid point against the protocol preconditions before
    /// anything runs. `N` is the problem dimension.
    void validate(std::size_t N) const;
};

/// n_even from required_iterations with sigma1 estimated by power iteration
/// and max|alpha_i| over-approximated by ||x0 - x*||.
template <Scalar S>
std::size_t iterations_for_epsilon(const IterationSystem<S>& sys, double epsilon);

/// Resolved K for a grid point (see StrategyPoint).
std::size_t resolved_k(const StrategyPoint& p);

/// Throws ConfigError for the first violated precondition of one grid point.
void validate_point(const StrategyPoint& p, std::size_t N, bool pad);

struct ReportRow {
    std::size_t grid_index = 0;
    std::string strategy;
    std::string backend;
    std::size_t N = 0;
    std::size_t m = 0;    ///< 0 for the baseline
    std::size_t n = 0;
    std::size_t ell = 0;  ///< 0 for the baseline
    std::size_t P = 0;
    std::size_t K = 0;
    std::uint64_t seed = 0;
    bool completed = false;
    CostLedger ledger;
    double error_norm = 0.0;         ///< ||x - x*||, NaN when x* is undefined
    double oracle_rel_error = 0.0;   ///< ||x - iterate(sys)|| / ||iterate(sys)||
    bool oracle_pass = false;        ///< exact equality, or rel. error <= 1e-6 for float
    std::string message;             ///< failure reason, empty on success

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Float rows pass the oracle when the relative error is at most this.
inline constexpr double kFloatOracleTolerance = 1e-6;

/// Runs every (grid point, seed) pair in grid order. A failing point becomes
/// a row with oracle_pass = false and a message; the run continues.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg);

/// Column order of the CSV report and the key order of JSON rows.
const std::vector<std::string>& report_columns();

std::string rows_to_csv(const std::vector<ReportRow>& rows);
nlohmann::ordered_json rows_to_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_json(const nlohmann::json& j);

/// Writes the report to `path` ("" or "-" for stdout).
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path);
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, std::ostream& out);

}  // namespace polylin
