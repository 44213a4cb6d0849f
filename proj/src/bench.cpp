#include "polylin/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace polylin {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_generator(const GeneratorSpec& spec) {
    if (spec.N == 0) throw ConfigError("generator: N must be at least 1");
    if (!(spec.target_rho > 0.0 && spec.target_rho < 1.0)) {
        throw ConfigError("generator: target_rho must lie strictly between 0 and 1");
    }
    if (spec.cast != CastKind::Raw && spec.N < 2) throw ConfigError("generator: jacobi and gd casts need N >= 2");
}

Matrix<double> random_symmetric(std::mt19937_64& rng, std::size_t N, bool zero_diagonal) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix<double> B(N, N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) {
            const double v = (zero_diagonal && i == j) ? 0.0 : u(rng);
            B(i, j) = v;
            B(j, i) = v;
        }
    return B;
}

Matrix<double> scaled_to_radius(const Matrix<double>& B, double target, std::uint64_t seed) {
    const double rho = spectral_radius_estimate(B, 2000, seed);
    if (rho == 0.0) return B;
    return (target / rho) * B;
}

/// Mutually orthogonal rows built by Gram-Schmidt from small random integer
/// vectors (no normalization, so exact arithmetic stays rational).
template <Scalar S>
Matrix<S> orthogonal_rows(std::mt19937_64& rng, std::size_t L, std::size_t N) {
    using T = ScalarTraits<S>;
    std::uniform_int_distribution<int> pick(-2, 2);
    std::vector<Vector<S>> rows;
    while (rows.size() < L) {
        Vector<S> v(N);
        for (std::size_t c = 0; c < N; ++c) v[c] = T::from_int(pick(rng));
        for (const auto& r : rows) {
            S num = T::zero();
            S den = T::zero();
            for (std::size_t c = 0; c < N; ++c) {
                num += v[c] * r[c];
                den += r[c] * r[c];
            }
            v -= (num / den) * r;
        }
        if (norm2(v) > 1e-6) rows.push_back(std::move(v));
    }
    Matrix<S> M(L, N);
    for (std::size_t r = 0; r < L; ++r)
        for (std::size_t c = 0; c < N; ++c) M(r, c) = rows[r][c];
    return M;
}

template <Scalar S>
Vector<S> random_rhs(std::mt19937_64& rng, std::size_t len) {
    Vector<S> y(len);
    if constexpr (std::is_same_v<S, double>) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t i = 0; i < len; ++i) y[i] = u(rng);
    } else {
        std::uniform_int_distribution<int> pick(-3, 3);
        for (std::size_t i = 0; i < len; ++i) y[i] = ScalarTraits<S>::from_int(pick(rng));
    }
    return y;
}

/// target_rho as the exact value of its shortest decimal spelling.
template <Scalar S>
S target_scalar(double target) {
    if constexpr (std::is_same_v<S, double>) {
        return target;
    } else {
        return ScalarTraits<S>::parse(ScalarTraits<double>::format(target));
    }
}

Matrix<Rational> exact_raw(std::mt19937_64& rng, std::size_t N, const Rational& t) {
    std::uniform_int_distribution<int> unit(-1, 1);
    std::uniform_int_distribution<int> quarter(-4, 4);
    Vector<Rational> u(N);
    Vector<Rational> v(N);
    Rational vu;
    do {
        vu = Rational(0);
        for (std::size_t i = 0; i < N; ++i) {
            u[i] = Rational(unit(rng));
            v[i] = Rational(unit(rng));
            vu += v[i] * u[i];
        }
    } while (vu == Rational(-1));

    Vector<Rational> d(N);
    for (std::size_t i = 0; i < N; ++i) d[i] = t * Rational(quarter(rng), 4);
    std::uniform_int_distribution<std::size_t> index(0, N - 1);
    d[index(rng)] = unit(rng) < 0 ? -t : t;

    Matrix<Rational> S(N, N);
    Matrix<Rational> S_inv(N, N);
    const Rational den = Rational(1) + vu;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            const Rational id = i == j ? Rational(1) : Rational(0);
            S(i, j) = id + u[i] * v[j];
            S_inv(i, j) = id - u[i] * v[j] / den;
        }
    return mat_mul(mat_mul(S, Matrix<Rational>::diagonal(d)), S_inv);
}

template <Scalar S>
IterationSystem<S> generate_impl(const GeneratorSpec& spec) {
    using T = ScalarTraits<S>;
    require_generator(spec);
    std::mt19937_64 rng(spec.seed);
    const std::size_t N = spec.N;
    const S t = target_scalar<S>(spec.target_rho);

    IterationSystem<S> sys;
    sys.x0 = Vector<S>(N);
    switch (spec.cast) {
        case CastKind::Raw: {
            if constexpr (std::is_same_v<S, double>) {
                sys.A = scaled_to_radius(random_symmetric(rng, N, false), t, spec.seed);
            } else {
                sys.A = exact_raw(rng, N, t);
            }
            sys.Q = Matrix<S>::identity(N);
            sys.y = random_rhs<S>(rng, N);
            break;
        }
        case CastKind::Jacobi: {
            Matrix<S> A0(N, N);
            if constexpr (std::is_same_v<S, double>) {
                A0 = scaled_to_radius(random_symmetric(rng, N, true), t, spec.seed);
            } else {
                std::uniform_int_distribution<int> coin(0, 1);
                std::vector<int> s(N);
                for (auto& v : s) v = coin(rng) == 0 ? -1 : 1;
                const S scale = t / T::from_int(static_cast<std::int64_t>(N - 1));
                for (std::size_t i = 0; i < N; ++i)
                    for (std::size_t j = 0; j < N; ++j)
                        if (i != j) A0(i, j) = T::from_int(s[i] * s[j]) * scale;
            }
            Matrix<S> M(N, N);
            for (std::size_t i = 0; i < N; ++i) {
                S c;
                if constexpr (std::is_same_v<S, double>) {
                    c = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
                } else {
                    c = T::from_ratio(std::uniform_int_distribution<int>(1, 4)(rng), 2);
                }
                for (std::size_t j = 0; j < N; ++j) M(i, j) = c * ((i == j ? T::one() : T::zero()) - A0(i, j));
            }
            auto cast = jacobi_cast(M);
            sys.A = std::move(cast.A);
            sys.Q = std::move(cast.Q);
            sys.y = random_rhs<S>(rng, N);
            break;
        }
        case CastKind::GradientDescent: {
            const std::size_t L = N - 1;
            const Matrix<S> M = orthogonal_rows<S>(rng, L, N);
            S s_max = T::zero();
            for (std::size_t r = 0; r < L; ++r) {
                S len = T::zero();
                for (std::size_t c = 0; c < N; ++c) len += M(r, c) * M(r, c);
                if (s_max < len) s_max = len;
            }
            const S lambda = T::one() - t;
            auto cast = gd_cast(M, t / s_max, lambda);
            sys.A = std::move(cast.A);
            sys.Q = std::move(cast.Q);
            sys.y = pad_vector(random_rhs<S>(rng, L), N);
            break;
        }
    }
    return sys;
}

template <Scalar S>
Matrix<S> read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
    return read_matrix<S>(in);
}

template <Scalar S>
Vector<S> read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vector file '" + path + "'");
    return read_vector<S>(in);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

/// Scalar or array field of a strategy entry as a list.
template <typename T>
std::vector<T> field_values(const json& entry, const char* key, std::vector<T> fallback) {
    if (!entry.contains(key)) return fallback;
    const json& v = entry.at(key);
    if (v.is_array()) {
        if (v.empty()) throw ConfigError(std::string("strategy field '") + key + "' is an empty list");
        return v.get<std::vector<T>>();
    }
    return {v.get<T>()};
}

std::string format_number(double v) { return ScalarTraits<double>::format(v); }

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

template <Scalar S>
double relative_error(const Vector<S>& x, const Vector<S>& ref) {
    const Vector<double> diff = to_float(x) - to_float(ref);
    const double scale = norm2(ref);
    return scale == 0.0 ? norm2(diff) : norm2(diff) / scale;
}

template <Scalar S>
std::vector<ReportRow> run_all(const ExperimentConfig& cfg) {
    const IterationSystem<S> base = cfg.files ? load_problem<S>(*cfg.files) : generate_problem<S>(*cfg.generator);
    const std::size_t N = base.dim();
    ExperimentConfig effective = cfg;
    if (cfg.epsilon) {
        const std::size_t n_even = iterations_for_epsilon(base, *cfg.epsilon);
        for (auto& p : effective.grid) {
            const std::size_t step = p.strategy == Strategy::MRPolyLin ? 2 * std::max<std::size_t>(p.ell, 1) : 2;
            p.n = round_up(n_even, step);
        }
    }
    effective.validate(N);
    const std::vector<StrategyPoint>& grid = effective.grid;

    std::optional<Vector<S>> x_star;
    try {
        x_star = fixed_point(base);
    } catch (const std::domain_error&) {
    }
    std::map<std::size_t, Vector<S>> oracle;

    std::vector<ReportRow> rows;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const StrategyPoint& p = grid[g];
        IterationSystem<S> sys = base;
        sys.n = p.n;
        if (!oracle.contains(p.n)) oracle.emplace(p.n, iterate(sys));
        const Vector<S>& expected = oracle.at(p.n);
        const bool baseline = p.strategy == Strategy::Baseline;

        for (std::uint64_t seed : cfg.seeds) {
            ReportRow row;
            row.grid_index = g;
            row.strategy = strategy_name(p.strategy);
            row.backend = std::string(ScalarTraits<S>::name);
            row.N = N;
            row.m = baseline ? 0 : p.m;
            row.n = p.n;
            row.ell = baseline ? 0 : p.ell;
            row.P = p.P;
            row.K = resolved_k(p);
            row.seed = seed;
            row.error_norm = kNaN;
            row.oracle_rel_error = kNaN;

            ClusterConfig cc;
            cc.P = p.P;
            cc.K = row.K;
            cc.beta1 = cfg.beta1;
            cc.beta2 = cfg.beta2;
            cc.straggler = cfg.straggler;
            cc.seed = seed;
            cc.compute_rate = cfg.compute_rate;
            try {
                RunResult<S> result;
                switch (p.strategy) {
                    case Strategy::Baseline:
                        result = run_baseline(sys, cc);
                        break;
                    case Strategy::PolyLin:
                        result = run_polylin(sys, CodingParams<S>::make(p.m, p.n, p.P, cfg.points), cc);
                        break;
                    case Strategy::MRPolyLin:
                        result = run_mrpolylin(sys, CodingParams<S>::make(p.m, p.n / p.ell, p.P, cfg.points), p.ell,
                                               cc);
                        break;
                }
                row.completed = result.completed;
                row.ledger = result.ledger;
                if (result.completed) {
                    row.oracle_rel_error = relative_error(result.x, expected);
                    if constexpr (std::is_same_v<S, double>) {
                        row.oracle_pass = row.oracle_rel_error <= kFloatOracleTolerance;
                    } else {
                        row.oracle_pass = result.x == expected;
                    }
                    if (x_star) row.error_norm = norm2(to_float(result.x) - to_float(*x_star));
                    if (!row.oracle_pass) row.message = "result differs from the sequential iteration";
                } else {
                    row.message = "stalled: a worker never responded";
                }
            } catch (const std::exception& e) {
                row.completed = false;
                row.message = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

std::string cast_name(CastKind c) {
    switch (c) {
        case CastKind::Raw:
            return "raw";
        case CastKind::Jacobi:
            return "jacobi";
        case CastKind::GradientDescent:
            return "gd";
    }
    return "raw";
}

CastKind parse_cast(const std::string& name) {
    if (name == "raw") return CastKind::Raw;
    if (name == "jacobi") return CastKind::Jacobi;
    if (name == "gd") return CastKind::GradientDescent;
    throw ConfigError("unknown cast '" + name + "' (raw, jacobi, gd)");
}

template <Scalar S>
IterationSystem<S> generate_problem(const GeneratorSpec& spec) {
    return generate_impl<S>(spec);
}

template <Scalar S>
IterationSystem<S> load_problem(const MatrixFiles& files) {
    if (files.A.empty() || files.y.empty()) throw ConfigError("problem files need at least A and y");
    IterationSystem<S> sys;
    sys.A = read_matrix_file<S>(files.A);
    const std::size_t N = sys.A.rows();
    sys.Q = files.Q.empty() ? Matrix<S>::identity(N) : read_matrix_file<S>(files.Q);
    sys.y = read_vector_file<S>(files.y);
    sys.x0 = files.x0.empty() ? Vector<S>(N) : read_vector_file<S>(files.x0);
    sys.validate(false);
    return sys;
}

std::vector<StrategyPoint> expand_strategy_entry(const json& entry) {
    reject_unknown(entry, {"strategy", "m", "n", "ell", "P", "K"}, "strategy entry");
    if (!entry.contains("strategy")) throw ConfigError("strategy entry needs a 'strategy' name");
    if (!entry.contains("P")) throw ConfigError("strategy entry needs a worker count 'P'");
    std::vector<StrategyPoint> out;
    try {
        for (const auto& name : field_values<std::string>(entry, "strategy", {}))
            for (auto m : field_values<std::size_t>(entry, "m", {2}))
                for (auto n : field_values<std::size_t>(entry, "n", {4}))
                    for (auto ell : field_values<std::size_t>(entry, "ell", {1}))
                        for (auto P : field_values<std::size_t>(entry, "P", {}))
                            for (auto K : field_values<std::size_t>(entry, "K", {0})) {
                                StrategyPoint p;
                                p.strategy = parse_strategy(name);
                                p.m = m;
                                p.n = n;
                                p.ell = ell;
                                p.P = P;
                                p.K = K;
                                out.push_back(p);
                            }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed strategy entry: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw ConfigError("unknown report format '" + name + "' (csv, json)");
}

template <Scalar S>
std::size_t iterations_for_epsilon(const IterationSystem<S>& sys, double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    ErrorBoundInputs in;
    in.sigma1 = spectral_radius_estimate(to_float(sys.A), 2000, 7);
    in.N = sys.dim();
    in.max_alpha = norm2(to_float(sys.x0) - to_float(fixed_point(sys)));
    in.epsilon = epsilon;
    if (in.max_alpha == 0.0) return 2;
    return required_iterations(in).n_even;
}

std::size_t resolved_k(const StrategyPoint& p) {
    if (p.K != 0) return p.K;
    if (p.strategy == Strategy::Baseline) return p.P;
    if (p.ell == 0 || p.n % p.ell != 0) return 0;
    return recovery_threshold(p.m, p.n / p.ell);
}

void validate_point(const StrategyPoint& p, std::size_t N, bool pad) {
    const std::string name = strategy_name(p.strategy);
    if (p.P == 0) throw ConfigError(name + ": P must be at least 1");
    if (p.n == 0) throw ConfigError(name + ": n must be at least 1");
    if (p.strategy == Strategy::Baseline) {
        if (p.K != 0 && p.K > p.P) {
            throw ConfigError("K exceeds P: K = " + std::to_string(p.K) + " > P = " + std::to_string(p.P));
        }
        if (p.K != 0 && p.K != p.P) {
            throw ConfigError("K mismatch: the baseline waits for all workers, so K must equal P = " +
                              std::to_string(p.P));
        }
        if (!pad && N % p.P != 0) {
            throw ConfigError("P does not divide N: P = " + std::to_string(p.P) + ", N = " + std::to_string(N) +
                              " (enable padding)");
        }
        return;
    }
    if (p.n % 2 != 0) throw ConfigError("odd n: " + name + " needs an even iteration count (got " +
                                        std::to_string(p.n) + ")");
    if (p.m == 0) throw ConfigError(name + ": m must be at least 1");
    if (p.strategy == Strategy::PolyLin && p.ell != 1) {
        throw ConfigError("polylin runs a single phase; use mrpolylin for ell = " + std::to_string(p.ell));
    }
    if (p.ell == 0 || p.n % p.ell != 0) {
        throw ConfigError("ell does not divide n: ell = " + std::to_string(p.ell) + ", n = " + std::to_string(p.n));
    }
    if ((p.n / p.ell) % 2 != 0) {
        throw ConfigError("n/ell must be even: n = " + std::to_string(p.n) + ", ell = " + std::to_string(p.ell));
    }
    std::size_t threshold = 0;
    try {
        threshold = recovery_threshold(p.m, p.n / p.ell);
    } catch (const std::exception&) {
        throw ConfigError("K exceeds P: recovery threshold for m = " + std::to_string(p.m) + " overflows");
    }
    const std::size_t K = p.K != 0 ? p.K : threshold;
    if (K > p.P) {
        throw ConfigError("K exceeds P: K = " + std::to_string(K) + " > P = " + std::to_string(p.P));
    }
    if (K != threshold) {
        throw ConfigError("K mismatch: K = " + std::to_string(p.K) + " but 2 m^(n/(2 ell)) - 1 = " +
                          std::to_string(threshold));
    }
    if (!pad && N % p.m != 0) {
        throw ConfigError("m does not divide N: m = " + std::to_string(p.m) + ", N = " + std::to_string(N) +
                          " (enable padding)");
    }
}

void ExperimentConfig::validate(std::size_t N) const {
    if (generator.has_value() == files.has_value()) {
        throw ConfigError("problem: give exactly one of 'generator' and 'files'");
    }
    if (generator) require_generator(*generator);
    if (!(std::isfinite(beta1) && beta1 >= 0.0 && std::isfinite(beta2) && beta2 >= 0.0)) {
        throw ConfigError("cluster: beta1 and beta2 must be finite and >= 0");
    }
    if (!(std::isfinite(compute_rate) && compute_rate >= 0.0)) {
        throw ConfigError("cluster: compute_rate must be finite and >= 0");
    }
    try {
        straggler.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("straggler: ") + e.what());
    }
    if (seeds.empty()) throw ConfigError("cluster: need at least one seed");
    if (epsilon && !(*epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    for (const auto& p : grid) {
        validate_point(p, N, pad);
        for (std::size_t w : straggler.failed_workers) {
            if (w >= p.P) {
                throw ConfigError("failed worker " + std::to_string(w) + " is out of range for P = " +
                                  std::to_string(p.P));
            }
        }
    }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        reject_unknown(j, {"problem", "strategies", "cluster", "backend", "points", "pad", "epsilon", "output", "format"},
                       "config");
        if (j.contains("problem")) {
            const json& problem = j.at("problem");
            reject_unknown(problem, {"generator", "files"}, "problem");
            if (problem.contains("generator") && problem.contains("files")) {
                throw ConfigError("problem: give exactly one of 'generator' and 'files'");
            }
            if (problem.contains("generator")) {
                const json& g = problem.at("generator");
                reject_unknown(g, {"N", "target_rho", "seed", "cast"}, "problem.generator");
                GeneratorSpec spec;
                spec.N = get_or<std::size_t>(g, "N", spec.N);
                spec.target_rho = get_or<double>(g, "target_rho", spec.target_rho);
                spec.seed = get_or<std::uint64_t>(g, "seed", spec.seed);
                spec.cast = parse_cast(get_or<std::string>(g, "cast", "raw"));
                cfg.generator = spec;
            }
            if (problem.contains("files")) {
                const json& f = problem.at("files");
                reject_unknown(f, {"A", "Q", "y", "x0"}, "problem.files");
                MatrixFiles files;
                files.A = get_or<std::string>(f, "A", "");
                files.Q = get_or<std::string>(f, "Q", "");
                files.y = get_or<std::string>(f, "y", "");
                files.x0 = get_or<std::string>(f, "x0", "");
                cfg.files = files;
                cfg.generator.reset();
            }
        }
        if (j.contains("strategies")) {
            const json& list = j.at("strategies");
            if (!list.is_array()) throw ConfigError("'strategies' must be an array");
            for (const auto& entry : list) {
                auto points = expand_strategy_entry(entry);
                cfg.grid.insert(cfg.grid.end(), points.begin(), points.end());
            }
        }
        if (j.contains("cluster")) {
            const json& c = j.at("cluster");
            reject_unknown(c, {"beta1", "beta2", "compute_rate", "seed", "seeds", "straggler"}, "cluster");
            cfg.beta1 = get_or<double>(c, "beta1", cfg.beta1);
            cfg.beta2 = get_or<double>(c, "beta2", cfg.beta2);
            cfg.compute_rate = get_or<double>(c, "compute_rate", cfg.compute_rate);
            if (c.contains("seed") && c.contains("seeds")) throw ConfigError("cluster: give 'seed' or 'seeds', not both");
            if (c.contains("seed")) cfg.seeds = {c.at("seed").get<std::uint64_t>()};
            if (c.contains("seeds")) cfg.seeds = field_values<std::uint64_t>(c, "seeds", {});
            if (c.contains("straggler")) {
                const json& s = c.at("straggler");
                reject_unknown(s, {"kind", "shift", "rate", "fail_prob", "failed_workers"}, "cluster.straggler");
                StragglerModel model;
                model.kind = parse_straggler_kind(get_or<std::string>(s, "kind", "none"));
                model.shift = get_or<double>(s, "shift", model.shift);
                model.rate = get_or<double>(s, "rate", model.rate);
                model.fail_prob = get_or<double>(s, "fail_prob", model.fail_prob);
                if (s.contains("failed_workers")) {
                    auto ids = s.at("failed_workers").get<std::vector<std::size_t>>();
                    model.failed_workers.insert(ids.begin(), ids.end());
                }
                cfg.straggler = model;
            }
        }
        if (j.contains("backend")) {
            const auto name = j.at("backend").get<std::string>();
            if (name == "exact") {
                cfg.backend = Backend::ExactRational;
            } else if (name == "float") {
                cfg.backend = Backend::Float64;
            } else {
                throw ConfigError("unknown backend '" + name + "' (exact, float)");
            }
        }
        if (j.contains("points")) {
            const auto name = j.at("points").get<std::string>();
            if (name == "default") {
                cfg.points = PointScheme::Default;
            } else if (name == "chebyshev") {
                cfg.points = PointScheme::Chebyshev;
            } else {
                throw ConfigError("unknown point scheme '" + name + "' (default, chebyshev)");
            }
        }
        cfg.pad = get_or<bool>(j, "pad", cfg.pad);
        if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
        cfg.output = get_or<std::string>(j, "output", cfg.output);
        if (j.contains("format")) cfg.format = parse_format(j.at("format").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json j;
    if (generator) {
        j["problem"]["generator"] = {{"N", generator->N},
                                     {"target_rho", generator->target_rho},
                                     {"seed", generator->seed},
                                     {"cast", cast_name(generator->cast)}};
    } else if (files) {
        j["problem"]["files"] = {{"A", files->A}, {"Q", files->Q}, {"y", files->y}, {"x0", files->x0}};
    }
    ordered_json strategies = ordered_json::array();
    for (const auto& p : grid) {
        strategies.push_back(
            {{"strategy", strategy_name(p.strategy)}, {"m", p.m}, {"n", p.n}, {"ell", p.ell}, {"P", p.P}, {"K", p.K}});
    }
    j["strategies"] = std::move(strategies);
    ordered_json straggler_json = {{"kind", straggler_kind_name(straggler.kind)},
                                   {"shift", straggler.shift},
                                   {"rate", straggler.rate},
                                   {"fail_prob", straggler.fail_prob},
                                   {"failed_workers", straggler.failed_workers}};
    j["cluster"] = {{"beta1", beta1},
                    {"beta2", beta2},
                    {"compute_rate", compute_rate},
                    {"seeds", seeds},
                    {"straggler", std::move(straggler_json)}};
    j["backend"] = backend == Backend::ExactRational ? "exact" : "float";
    j["points"] = points == PointScheme::Chebyshev ? "chebyshev" : "default";
    j["pad"] = pad;
    if (epsilon) j["epsilon"] = *epsilon;
    j["output"] = output;
    j["format"] = format == ReportFormat::Csv ? "csv" : "json";
    return j;
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.backend == Backend::ExactRational) return run_all<Rational>(cfg);
    return run_all<double>(cfg);
}

const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> columns = {
        "grid_index",   "strategy",      "backend",   "N",         "m",
        "n",            "ell",           "P",         "K",         "seed",
        "completed",    "rounds",        "words_down", "words_up", "worker_mults",
        "master_mults", "storage_words", "offline_words", "comm_cost", "sim_time",
        "stragglers_tolerated", "error_norm", "oracle_rel_error", "oracle_pass", "message"};
    return columns;
}

std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    const auto& columns = report_columns();
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
        const auto& l = r.ledger;
        out << r.grid_index << ',' << r.strategy << ',' << r.backend << ',' << r.N << ',' << r.m << ',' << r.n << ','
            << r.ell << ',' << r.P << ',' << r.K << ',' << r.seed << ',' << (r.completed ? "true" : "false") << ','
            << l.rounds << ',' << l.words_down << ',' << l.words_up << ',' << l.worker_mults << ',' << l.master_mults
            << ',' << l.storage_words << ',' << l.offline_words << ',' << format_number(l.comm_cost) << ','
            << format_number(l.sim_time) << ',' << l.stragglers_tolerated << ',' << format_number(r.error_norm) << ','
            << format_number(r.oracle_rel_error) << ',' << (r.oracle_pass ? "true" : "false") << ','
            << csv_field(r.message) << '\n';
    }
    return out.str();
}

ordered_json rows_to_json(const std::vector<ReportRow>& rows) {
    ordered_json out = ordered_json::array();
    for (const auto& r : rows) {
        const auto& l = r.ledger;
        ordered_json row;
        row["grid_index"] = r.grid_index;
        row["strategy"] = r.strategy;
        row["backend"] = r.backend;
        row["N"] = r.N;
        row["m"] = r.m;
        row["n"] = r.n;
        row["ell"] = r.ell;
        row["P"] = r.P;
        row["K"] = r.K;
        row["seed"] = r.seed;
        row["completed"] = r.completed;
        row["rounds"] = l.rounds;
        row["words_down"] = l.words_down;
        row["words_up"] = l.words_up;
        row["worker_mults"] = l.worker_mults;
        row["master_mults"] = l.master_mults;
        row["storage_words"] = l.storage_words;
        row["offline_words"] = l.offline_words;
        row["comm_cost"] = number_or_null(l.comm_cost);
        row["sim_time"] = number_or_null(l.sim_time);
        row["stragglers_tolerated"] = l.stragglers_tolerated;
        row["error_norm"] = number_or_null(r.error_norm);
        row["oracle_rel_error"] = number_or_null(r.oracle_rel_error);
        row["oracle_pass"] = r.oracle_pass;
        row["message"] = r.message;
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<ReportRow> rows_from_json(const json& j) {
    std::vector<ReportRow> rows;
    for (const auto& row : j) {
        ReportRow r;
        r.grid_index = row.at("grid_index").get<std::size_t>();
        r.strategy = row.at("strategy").get<std::string>();
        r.backend = row.at("backend").get<std::string>();
        r.N = row.at("N").get<std::size_t>();
        r.m = row.at("m").get<std::size_t>();
        r.n = row.at("n").get<std::size_t>();
        r.ell = row.at("ell").get<std::size_t>();
        r.P = row.at("P").get<std::size_t>();
        r.K = row.at("K").get<std::size_t>();
        r.seed = row.at("seed").get<std::uint64_t>();
        r.completed = row.at("completed").get<bool>();
        r.ledger = ledger_from_json(row);
        r.error_norm = number_or(row.at("error_norm"), kNaN);
        r.oracle_rel_error = number_or(row.at("oracle_rel_error"), kNaN);
        r.oracle_pass = row.at("oracle_pass").get<bool>();
        r.message = row.at("message").get<std::string>();
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::Csv) {
        out << rows_to_csv(rows);
    } else {
        out << rows_to_json(rows).dump(2) << '\n';
    }
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path) {
    if (path.empty() || path == "-") {
        emit_report(rows, format, std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open report file '" + path + "' for writing");
    emit_report(rows, format, out);
    if (!out) throw std::runtime_error("failed writing report file '" + path + "'");
}

template IterationSystem<double> generate_problem<double>(const GeneratorSpec&);
template IterationSystem<Rational> generate_problem<Rational>(const GeneratorSpec&);
template IterationSystem<double> load_problem<double>(const MatrixFiles&);
template std::size_t iterations_for_epsilon<double>(const IterationSystem<double>&, double);
template std::size_t iterations_for_epsilon<Rational>(const IterationSystem<Rational>&, double);
template IterationSystem<Rational> load_problem<Rational>(const MatrixFiles&);

}  // namespace polylin
