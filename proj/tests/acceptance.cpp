// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/symbolic.hpp"
#include "polylin/bench.hpp"
#include "polylin/cluster.hpp"
#include "polylin/coding.hpp"
#include "polylin/solver.hpp"

using namespace polylin;
using R = Rational;

namespace {

struct MN {
    std::size_t m;
    std::size_t n;
};

constexpr MN kGrid[] = {{2, 2}, {3, 2}, {2, 4}, {2, 6}};
constexpr std::size_t kDims[] = {4, 6, 8};
constexpr int kSystems = 20;

struct Verdict {
    bool pass = true;
    std::string detail;
};

template <class F>
void for_each_subset(std::size_t P, std::size_t K, F f) {
    std::vector<std::size_t> idx(K);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        f(idx);
        std::size_t i = K;
        while (i > 0 && idx[i - 1] == P - K + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < K; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::size_t subset_count(std::size_t P, std::size_t K) {
    std::size_t c = 0;
    for_each_subset(P, K, [&](const auto&) { ++c; });
    return c;
}

template <Scalar S>
std::vector<EtaEval<S>> all_evals(const IterationSystem<S>& sys, const CodingParams<S>& params) {
    auto padded = zero_pad(sys.A, sys.Q, sys.x0, sys.y, params.m);
    std::vector<EtaEval<S>> evals;
    for (std::size_t w = 0; w < params.P; ++w)
        evals.push_back(worker_eta(make_shard(padded.A, padded.Q, params, w), padded.x0, padded.y));
    return evals;
}

// Weights for every K-subset of the P points, in for_each_subset order.
template <Scalar S>
std::vector<std::vector<S>> subset_weights(const CodingParams<S>& params) {
    std::vector<std::vector<S>> out;
    for_each_subset(params.P, params.K, [&](const std::vector<std::size_t>& idx) {
        std::vector<S> xs;
        for (auto i : idx) xs.push_back(params.eval_points[i]);
        out.push_back(lagrange_coefficient_weights<S>(xs, params.target_power()));
    });
    return out;
}

ClusterConfig cluster(std::size_t P, std::size_t K) {
    ClusterConfig c;
    c.P = P;
    c.K = K;
    return c;
}

Verdict decode_any_k() {
    std::mt19937_64 rng(101);
    std::size_t decodes = 0;
    std::size_t bad = 0;
    for (auto [m, n] : kGrid) {
        const std::size_t K = recovery_threshold(m, n);
        const auto params = CodingParams<R>::make(m, n, K + 3);
        const auto weights = subset_weights(params);
        for (std::size_t N : kDims)
            for (int s = 0; s < kSystems; ++s) {
                const auto sys = oracle::random_exact_system(rng, N, n);
                const auto expected = iterate(sys);
                const auto evals = all_evals(sys, params);
                std::size_t k = 0;
                for_each_subset(params.P, K, [&](const std::vector<std::size_t>& idx) {
                    std::vector<EtaEval<R>> sub;
                    for (auto i : idx) sub.push_back(evals[i]);
                    if (combine_evals<R>(sub, weights[k++], N) != expected) ++bad;
                    ++decodes;
                });
                std::vector<EtaEval<R>> last(evals.end() - K, evals.end());
                if (decode<R>(last, m, n, N) != expected) ++bad;
            }
    }
    std::ostringstream d;
    d << decodes << " subset decodes over 4 (m,n) x 3 N x " << kSystems << " systems, " << bad << " mismatches";
    return {bad == 0, d.str()};
}

Verdict symbolic_eta_shape() {
    std::mt19937_64 rng(202);
    std::size_t bad = 0;
    std::size_t checked = 0;
    for (auto [m, n] : kGrid)
        for (std::size_t N : kDims)
            for (int s = 0; s < kSystems; ++s) {
                const auto sys = oracle::random_exact_system(rng, N, n);
                const auto padded = zero_pad(sys.A, sys.Q, sys.x0, sys.y, m);
                const auto poly = oracle::symbolic_eta(padded.A, padded.Q, padded.x0, padded.y, m, n);
                const auto want = oracle::power_sum_target(sys.A, sys.Q, sys.x0, sys.y, n);
                const long degree = static_cast<long>(2 * ipow(m, n / 2) - 2);
                if (poly.degree() != degree) ++bad;
                if (truncate(poly.coefficient(ipow(m, n / 2) - 1), N) != want) ++bad;
                // the worker recursion evaluates this same polynomial
                const auto params = CodingParams<R>::make(m, n, recovery_threshold(m, n));
                for (const auto& e : all_evals(sys, params))
                    if (e.value != poly.eval(e.xi)) ++bad;
                ++checked;
            }
    std::ostringstream d;
    d << checked << " symbolic polynomials, " << bad << " mismatches";
    return {bad == 0, d.str()};
}

Verdict telescoping() {
    std::mt19937_64 rng(303);
    const std::size_t m = 2;
    std::size_t bad = 0;
    std::size_t checked = 0;
    for (std::size_t N : kDims)
        for (int s = 0; s < 5; ++s) {
            const auto sys = oracle::random_exact_system(rng, N, 2);
            const auto enc = oracle::encodings(sys.A, sys.Q, m);
            auto AQ = [&](std::size_t p) { return mat_mul(oracle::matrix_power(sys.A, p), sys.Q); };
            for (std::size_t l : {4, 6}) {
                const std::size_t centre = ipow(m, l / 2) - 1;
                const auto even = oracle::telescoped(enc, l);
                const auto odd = oracle::telescoped(enc, l - 1);
                if (even.coefficient(centre) != AQ(l - 1)) ++bad;
                if (odd.coefficient(centre) != AQ(l - 2)) ++bad;
                const auto pair = oracle::add(even, odd);
                if (pair.coefficient(centre) != AQ(l - 1) + AQ(l - 2)) ++bad;
                if (even.degree() != odd.degree()) ++bad;
                ++checked;
            }
        }
    std::ostringstream d;
    d << checked << " (l, l-1) pairs at l in {4, 6}, " << bad << " mismatches";
    return {bad == 0, d.str()};
}

Verdict error_bound() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_real_distribution<double> s(0.3, 0.9);
    std::size_t bad = 0;
    double worst_final = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t N = 2 + trial % 7;
        const double sigma1 = s(rng);
        Vector<double> diag(N);
        for (std::size_t i = 0; i < N; ++i) diag[i] = sigma1 * u(rng);
        diag[trial % N] = trial % 2 ? sigma1 : -sigma1;
        IterationSystem<double> sys{Matrix<double>::diagonal(diag), Matrix<double>::identity(N), Vector<double>(N),
                                    Vector<double>(N), 2};
        Vector<double> xs(N);
        double max_alpha = 0;
        for (std::size_t i = 0; i < N; ++i) {
            sys.y[i] = u(rng);
            sys.x0[i] = 3 * u(rng);
            xs[i] = sys.y[i] / (1.0 - diag[i]);
            max_alpha = std::max(max_alpha, std::fabs(sys.x0[i] - xs[i]));
        }
        for (std::size_t n = 1; n <= 20; ++n) {
            const auto x = iterate_steps(sys.A, sys.Q, sys.x0, sys.y, n);
            if (norm2(x - xs) > static_cast<double>(N) * std::pow(sigma1, n) * max_alpha * (1 + 1e-12)) ++bad;
        }
        sys.n = required_iterations({sigma1, N, max_alpha, 1e-3}).n_even;
        const double err = error_norm(sys, iterate(sys));
        worst_final = std::max(worst_final, err);
        if (err > 1e-3) ++bad;
    }
    std::ostringstream d;
    d << "50 diagonal systems, worst error at n_even " << worst_final << ", " << bad << " violations";
    return {bad == 0, d.str()};
}

Verdict cost_model() {
    const std::size_t N = 60;
    const std::size_t P = 10;
    const std::size_t n = 4;
    const double beta1 = 1.0;
    const double beta2 = 0.001;
    auto sys = generate_problem<double>(GeneratorSpec{N, 0.5, 5, CastKind::Raw});
    sys.n = n;
    auto cfg = [&](std::size_t K) {
        auto c = cluster(P, K);
        c.beta1 = beta1;
        c.beta2 = beta2;
        return c;
    };
    const auto base = run_baseline(sys, cfg(P)).ledger;
    const auto poly = run_polylin(sys, CodingParams<double>::make(2, n, P), cfg(7)).ledger;
    const auto mr = run_mrpolylin(sys, CodingParams<double>::make(2, n / 2, P), 2, cfg(3)).ledger;
    const auto pb = predicted_costs(Strategy::Baseline, N, P, P, n, 1, 1, beta1, beta2);
    const auto pp = predicted_costs(Strategy::PolyLin, N, P, 7, n, 1, 2, beta1, beta2);
    const auto pm = predicted_costs(Strategy::MRPolyLin, N, P, 3, n, 2, 2, beta1, beta2);

    bool ok = true;
    auto same = [&](const CostLedger& got, const CostLedger& want) {
        ok = ok && got.rounds == want.rounds && got.words_down == want.words_down && got.words_up == want.words_up;
    };
    same(base, pb);
    same(poly, pp);
    same(mr, pm);
    ok = ok && base.rounds == n && poly.rounds == 1 && mr.rounds == 2;
    ok = ok && base.words_down + base.words_up == n * (1 + P) * N / P;
    ok = ok && poly.words_down + poly.words_up == 2 * N;
    ok = ok && mr.words_down + mr.words_up == 2 * 2 * N;
    const double base_lead = static_cast<double>(n * N * N) / P;
    const double poly_lead = static_cast<double>(n * N * N) / 2;
    const double rb = static_cast<double>(base.worker_mults) / base_lead;
    const double rp = static_cast<double>(poly.worker_mults) / poly_lead;
    ok = ok && rb >= 1 / 1.1 && rb <= 1.1 && rp >= 1 / 1.1 && rp <= 1.1;
    std::ostringstream d;
    d << "rounds (" << base.rounds << ", " << poly.rounds << ", " << mr.rounds << "), words ("
      << base.words_down + base.words_up << ", " << poly.words_down + poly.words_up << ", "
      << mr.words_down + mr.words_up << "), worker mults / lead term (" << rb << ", " << rp << ")";
    return {ok, d.str()};
}

Verdict straggler_resilience() {
    std::mt19937_64 rng(606);
    std::size_t runs = 0;
    std::size_t bad = 0;
    const auto sys = oracle::random_exact_system(rng, 4, 4);
    const auto expected = iterate(sys);
    auto failing = [](std::size_t P, std::size_t K, const std::vector<std::size_t>& alive) {
        auto c = cluster(P, K);
        std::set<std::size_t> dead;
        for (std::size_t w = 0; w < P; ++w)
            if (std::find(alive.begin(), alive.end(), w) == alive.end()) dead.insert(w);
        c.straggler.kind = StragglerKind::Fail;
        c.straggler.failed_workers = dead;
        return c;
    };
    for (std::size_t m : {1, 2}) {
        const std::size_t K = recovery_threshold(m, 4);
        for (std::size_t P = K; P <= 10; ++P) {
            const auto params = CodingParams<R>::make(m, 4, P);
            for_each_subset(P, K, [&](const std::vector<std::size_t>& alive) {
                if (run_polylin(sys, params, failing(P, K, alive)).x != expected) ++bad;
                ++runs;
            });
        }
    }
    for (std::size_t m : {2, 3}) {
        const std::size_t K = recovery_threshold(m, 2);
        for (std::size_t P = K; P <= 10; ++P) {
            const auto params = CodingParams<R>::make(m, 2, P);
            for_each_subset(P, K, [&](const std::vector<std::size_t>& alive) {
                if (run_mrpolylin(sys, params, 2, failing(P, K, alive)).x != expected) ++bad;
                ++runs;
            });
        }
    }
    std::size_t stalls = 0;
    std::size_t baseline_runs = 0;
    for (std::size_t P = 2; P <= 10; ++P)
        for (std::size_t alive = 1; alive < P; ++alive)
            for_each_subset(P, alive, [&](const std::vector<std::size_t>& up) {
                auto c = failing(P, P, up);
                const auto res = run_baseline(sys, c);
                if (!res.completed && std::isinf(res.ledger.sim_time)) ++stalls;
                ++baseline_runs;
            });
    std::ostringstream d;
    d << runs << " coded failure patterns, " << bad << " wrong; baseline stalled in " << stalls << " of "
      << baseline_runs;
    return {bad == 0 && stalls == baseline_runs, d.str()};
}

Verdict equivalence_chain() {
    std::mt19937_64 rng(707);
    std::size_t chains = 0;
    std::size_t bad = 0;
    for (auto [m, n] : kGrid)
        for (std::size_t N : kDims)
            for (int s = 0; s < kSystems; ++s) {
                const auto sys = oracle::random_exact_system(rng, N, n);
                const auto expected = iterate(sys);
                const std::size_t K = recovery_threshold(m, n);
                const auto poly = run_polylin(sys, CodingParams<R>::make(m, n, K + 3), cluster(K + 3, K));
                if (poly.x != expected) ++bad;
                if (run_baseline(sys, cluster(3, 3)).x != expected) ++bad;
                for (std::size_t ell = 1; ell <= n; ++ell) {
                    if (n % ell != 0 || (n / ell) % 2 != 0) continue;
                    const std::size_t Kp = recovery_threshold(m, n / ell);
                    const auto mr = run_mrpolylin(sys, CodingParams<R>::make(m, n / ell, Kp + 3), ell,
                                                  cluster(Kp + 3, Kp));
                    if (mr.x != expected) ++bad;
                    ++chains;
                }
            }
    std::ostringstream d;
    d << chains << " (system, ell) chains, " << bad << " mismatches";
    return {bad == 0, d.str()};
}

Verdict round_ordering() {
    const std::size_t N = 60;
    const std::size_t P = 10;
    const std::size_t n = 4;
    auto sys = generate_problem<double>(GeneratorSpec{N, 0.5, 8, CastKind::Raw});
    sys.n = n;
    auto cfg = [&](std::size_t K) {
        auto c = cluster(P, K);
        c.beta1 = 100;
        c.beta2 = 0.001;
        c.compute_rate = 1e-8;
        c.seed = 2024;
        c.straggler.kind = StragglerKind::ShiftedExponential;
        c.straggler.shift = 0.01;
        c.straggler.rate = 10;
        return c;
    };
    const double poly = run_polylin(sys, CodingParams<double>::make(2, n, P), cfg(7)).ledger.sim_time;
    const double mr = run_mrpolylin(sys, CodingParams<double>::make(2, n / 2, P), 2, cfg(3)).ledger.sim_time;
    const double base = run_baseline(sys, cfg(P)).ledger.sim_time;
    std::ostringstream d;
    d << "sim_time polylin " << poly << " < mrpolylin " << mr << " < baseline " << base;
    return {poly < mr && mr < base, d.str()};
}

Verdict float_sanity() {
    std::mt19937_64 rng(909);
    const std::size_t m = 2;
    const std::size_t n = 4;
    const std::size_t K = recovery_threshold(m, n);
    const auto params = CodingParams<double>::make(m, n, K + 3);
    const auto weights = subset_weights(params);
    double worst = 0;
    for (std::size_t N : kDims)
        for (int s = 0; s < kSystems; ++s) {
            const auto sys = oracle::random_float_system(rng, N, n);
            const auto expected = iterate(sys);
            const auto evals = all_evals(sys, params);
            std::size_t k = 0;
            for_each_subset(params.P, K, [&](const std::vector<std::size_t>& idx) {
                std::vector<EtaEval<double>> sub;
                for (auto i : idx) sub.push_back(evals[i]);
                const auto x = combine_evals<double>(sub, weights[k++], N);
                worst = std::max(worst, norm2(x - expected) / norm2(expected));
            });
        }
    std::ostringstream d;
    d << "default points 1 + j/(4P), " << subset_count(params.P, K) << " subsets x 60 systems, worst relative error "
      << worst << " (limit 1e-6)";
    return {worst <= 1e-6, d.str()};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    const Criterion criteria[] = {
        {"1 any K outputs decode to iterate, exact", decode_any_k},
        {"2 symbolic eta degree and central coefficient", symbolic_eta_shape},
        {"3 telescoped coefficient and paired identities", telescoping},
        {"4 error decay bound and n_even", error_bound},
        {"5 measured costs match predictions", cost_model},
        {"6 straggler resilience", straggler_resilience},
        {"7 mrpolylin = polylin = baseline = iterate", equivalence_chain},
        {"8 fewer rounds finish first", round_ordering},
        {"9 float64 decode at default points", float_sanity},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %-48s %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        if (!v.pass) ++failed;
    }
    std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
    return failed == 0 ? 0 : 1;
}
