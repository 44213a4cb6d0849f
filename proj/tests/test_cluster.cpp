#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "oracle/symbolic.hpp"
#include "polylin/cluster.hpp"

using namespace polylin;
using R = Rational;

namespace {

ClusterConfig cluster(std::size_t P, std::size_t K, double beta1 = 1.0, double beta2 = 0.01) {
    ClusterConfig c;
    c.P = P;
    c.K = K;
    c.beta1 = beta1;
    c.beta2 = beta2;
    return c;
}

IterationSystem<R> zero_start(std::mt19937_64& rng, std::size_t N, std::size_t n) {
    auto sys = oracle::random_exact_system(rng, N, n);
    sys.x0 = Vector<R>(N);
    return sys;
}

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

}  // namespace

TEST_CASE("fastest-K selection") {
    auto cfg = cluster(5, 3);
    std::vector<std::uint64_t> equal(5, 100);
    auto out = simulate_round(equal, cfg, 0);
    CHECK(out.responders == std::vector<std::size_t>{0, 1, 2});
    CHECK(out.elapsed == 0.0);

    cfg.K = 4;
    cfg.compute_rate = 1.0;
    std::vector<std::uint64_t> work{0, 0, 5, 0, 0};
    out = simulate_round(work, cfg, 0);
    CHECK(out.responders == std::vector<std::size_t>{0, 1, 3, 4});
    CHECK(out.elapsed == 0.0);

    cfg.straggler.failed_workers = {0, 1};
    cfg.K = 3;
    out = simulate_round(work, cfg, 0);
    CHECK(out.responders == std::vector<std::size_t>{2, 3, 4});
    cfg.K = 4;
    CHECK_THROWS_AS(simulate_round(work, cfg, 0), DecodeImpossible);
    CHECK_THROWS(simulate_round(std::vector<std::uint64_t>(3), cfg, 0));
}

TEST_CASE("straggler models") {
    StragglerModel se;
    se.kind = StragglerKind::ShiftedExponential;
    se.shift = 0.5;
    se.rate = 2.0;
    double mean = 0;
    for (std::size_t w = 0; w < 2000; ++w) {
        const double d = se.delay(42, w, 0);
        CHECK(d >= 0.5);
        CHECK(d == se.delay(42, w, 0));
        mean += d;
    }
    CHECK(mean / 2000 == doctest::Approx(1.0).epsilon(0.1));
    CHECK(se.delay(42, 3, 0) != se.delay(42, 3, 1));
    CHECK(se.delay(42, 3, 0) != se.delay(43, 3, 0));

    StragglerModel fail;
    fail.kind = StragglerKind::Fail;
    fail.fail_prob = 1.0;
    CHECK(std::isinf(fail.delay(1, 0, 0)));
    fail.fail_prob = 0.0;
    CHECK(fail.delay(1, 0, 0) == 0.0);
    fail.fail_prob = 1.5;
    CHECK_THROWS(fail.validate());

    auto cfg = cluster(8, 5);
    cfg.straggler = se;
    cfg.seed = 9;
    cfg.compute_rate = 1e-3;
    std::vector<std::uint64_t> work(8, 1000);
    auto a = simulate_round(work, cfg, 2);
    auto b = simulate_round(work, cfg, 2);
    CHECK(a.responders == b.responders);
    CHECK(a.finish_times == b.finish_times);

    CHECK_THROWS(cluster(3, 4).validate());
    CHECK_THROWS(cluster(3, 0).validate());
    CHECK_THROWS(cluster(3, 2, -1.0).validate());
    CHECK(parse_straggler_kind("shifted-exponential") == StragglerKind::ShiftedExponential);
    CHECK_THROWS(parse_straggler_kind("slow"));
}

TEST_CASE("baseline protocol") {
    std::mt19937_64 rng(1);
    auto sys = oracle::random_exact_system(rng, 6, 4);
    auto cfg = cluster(3, 3, 2.0, 0.5);
    auto res = run_baseline(sys, cfg);
    CHECK(res.completed);
    CHECK(res.x == iterate(sys));
    CHECK(res.ledger.rounds == 4);
    CHECK(res.ledger.words_down == 4 * 6);
    CHECK(res.ledger.words_up == 4 * 2);
    CHECK(res.ledger.comm_cost == doctest::Approx(2.0 * 4 + 0.5 * 4 * (1.0 + 3) / 3 * 6));
    CHECK(res.responder_sets.size() == 4);
    for (const auto& s : res.responder_sets) CHECK(s.size() == 3);
    CHECK(res.ledger.stragglers_tolerated == 0);

    // odd n and padding are fine for the baseline
    sys.n = 3;
    auto padded = run_baseline(sys, cluster(4, 4));
    CHECK(padded.x == iterate(sys));

    cfg.straggler.kind = StragglerKind::Fail;
    cfg.straggler.failed_workers = {1};
    auto stall = run_baseline(sys, cfg);
    CHECK_FALSE(stall.completed);
    CHECK(std::isinf(stall.ledger.sim_time));
    CHECK(stall.x.size() == 0);

    CHECK_THROWS(run_baseline(sys, cluster(3, 2)));
}

TEST_CASE("polylin protocol") {
    std::mt19937_64 rng(2);
    auto sys = oracle::random_exact_system(rng, 8, 4);
    auto params = CodingParams<R>::make(2, 4, 10);
    auto cfg = cluster(10, 7, 1.0, 0.01);
    auto res = run_polylin(sys, params, cfg);
    CHECK(res.x == iterate(sys));
    CHECK(res.ledger.rounds == 1);
    CHECK(res.ledger.words_down == 8);
    CHECK(res.ledger.words_up == 8);
    CHECK(res.ledger.comm_cost == doctest::Approx(1.0 + 2 * 8 * 0.01));
    CHECK(res.ledger.stragglers_tolerated == 3);
    CHECK(res.responder_sets == std::vector<std::vector<std::size_t>>{{0, 1, 2, 3, 4, 5, 6}});
    CHECK(res.ledger.storage_words == 5 * 64 / 2 + 2 * 2);
    CHECK(res.ledger.offline_words == res.ledger.storage_words + 8);
    CHECK(res.ledger.master_mults > 0);

    cfg.straggler.failed_workers = {0, 4, 9};
    auto tolerant = run_polylin(sys, params, cfg);
    CHECK(tolerant.x == iterate(sys));
    CHECK(tolerant.responder_sets[0] == std::vector<std::size_t>{1, 2, 3, 5, 6, 7, 8});
    cfg.straggler.failed_workers = {0, 4, 8, 9};
    CHECK_THROWS_AS(run_polylin(sys, params, cfg), DecodeImpossible);

    CHECK_THROWS(run_polylin(sys, params, cluster(10, 6)));
    CHECK_THROWS(run_polylin(sys, params, cluster(9, 7)));
    sys.n = 6;
    CHECK_THROWS(run_polylin(sys, params, cluster(10, 7)));
}

TEST_CASE("polylin worker work with a zero start") {
    std::mt19937_64 rng(3);
    auto sys = zero_start(rng, 12, 4);
    auto res = run_polylin(sys, CodingParams<R>::make(2, 4, 8), cluster(8, 7));
    // per worker: n N^2 / m for the matrix chain plus N L + N (L - 1) scalings, L = n / 2
    CHECK(res.ledger.worker_mults == 4 * 144 / 2 + 12 * 2 + 12 * 1);
    CHECK(res.x == iterate(sys));

    const std::size_t N = 60;
    std::uniform_real_distribution<double> u(-1, 1);
    Matrix<double> A(N, N), Q(N, N);
    Vector<double> y(N);
    for (std::size_t r = 0; r < N; ++r) {
        y[r] = u(rng);
        for (std::size_t c = 0; c < N; ++c) {
            A(r, c) = u(rng) / (2.0 * N);
            Q(r, c) = u(rng);
        }
    }
    IterationSystem<double> big{A, Q, y, Vector<double>(N), 4};
    auto f = run_polylin(big, CodingParams<double>::make(2, 4, 10), cluster(10, 7));
    const double lead = 4.0 * N * N / 2;
    const double per_worker = static_cast<double>(f.ledger.worker_mults);
    CHECK(per_worker >= lead);
    CHECK(per_worker <= 1.1 * lead);
}

TEST_CASE("mrpolylin protocol") {
    std::mt19937_64 rng(4);
    auto sys = oracle::random_exact_system(rng, 6, 4);
    auto phase = CodingParams<R>::make(2, 2, 5);
    CHECK(phase.K == 3);
    auto res = run_mrpolylin(sys, phase, 2, cluster(5, 3, 1.0, 0.5));
    CHECK(res.x == iterate(sys));
    CHECK(res.ledger.rounds == 2);
    CHECK(res.ledger.comm_cost == doctest::Approx(2.0 + 0.5 * 2 * 2 * 6));
    CHECK(res.responder_sets.size() == 2);

    auto full = CodingParams<R>::make(2, 4, 8);
    auto cfg = cluster(8, 7);
    cfg.straggler.kind = StragglerKind::ShiftedExponential;
    cfg.seed = 5;
    CHECK(run_mrpolylin(sys, full, 1, cfg) == run_polylin(sys, full, cfg));

    CHECK_THROWS(run_mrpolylin(sys, phase, 3, cluster(5, 3)));
    CHECK_THROWS(run_mrpolylin(sys, phase, 4, cluster(5, 3)));
    CHECK_THROWS(run_mrpolylin(sys, phase, 0, cluster(5, 3)));
}

TEST_CASE("predicted costs") {
    auto p = predicted_costs(Strategy::PolyLin, 100, 10, 7, 4, 1, 2, 1.0, 0.01);
    CHECK(p.comm_cost == doctest::Approx(3.0));
    CHECK(p.rounds == 1);
    CHECK(p.worker_mults == 4 * 100 * 100 / 2);
    CHECK(p.storage_words == 5 * 100 * 100 / 2);
    auto b = predicted_costs(Strategy::Baseline, 50, 1, 1, 1, 1, 1, 2.0, 0.1);
    CHECK(b.comm_cost == doctest::Approx(2.0 + 2 * 50 * 0.1));
    for (std::size_t ell : {1, 2, 4}) {
        const std::size_t n = 8;
        auto mr = predicted_costs(Strategy::MRPolyLin, 20, 40, recovery_threshold(2, n / ell), n, ell, 2, 1, 1);
        CHECK(mr.rounds == ell);
        CHECK(mr.words_down + mr.words_up == 2 * ell * 20);
        CHECK(mr.storage_words == (n + ell) / ell * 400 / 2);
    }
    // padded dimension
    auto padded = predicted_costs(Strategy::Baseline, 7, 4, 4, 2, 1, 1, 0, 0);
    CHECK(padded.words_down == 2 * 8);
    CHECK_THROWS(predicted_costs(Strategy::PolyLin, 10, 10, 5, 4, 1, 2, 1, 1));
    CHECK_THROWS(predicted_costs(Strategy::MRPolyLin, 10, 10, 3, 4, 3, 2, 1, 1));
    CHECK_THROWS(predicted_costs(Strategy::Baseline, 10, 4, 3, 4, 1, 1, 1, 1));
}

TEST_CASE("measured ledgers match predictions") {
    std::mt19937_64 rng(5);
    for (std::size_t N : {5, 6, 8}) {
        auto sys = zero_start(rng, N, 4);
        auto check = [&](Strategy s, const CostLedger& got, std::size_t P, std::size_t K, std::size_t ell,
                         std::size_t m) {
            auto want = predicted_costs(s, N, P, K, 4, ell, m, 3.0, 0.25);
            CHECK(got.rounds == want.rounds);
            CHECK(got.words_down == want.words_down);
            CHECK(got.words_up == want.words_up);
            CHECK(got.comm_cost == doctest::Approx(want.comm_cost));
            CHECK(got.stragglers_tolerated == want.stragglers_tolerated);
            CHECK(got.offline_words >= want.offline_words);
        };
        check(Strategy::Baseline, run_baseline(sys, cluster(4, 4, 3.0, 0.25)).ledger, 4, 4, 1, 1);
        check(Strategy::PolyLin, run_polylin(sys, CodingParams<R>::make(2, 4, 9), cluster(9, 7, 3.0, 0.25)).ledger,
              9, 7, 1, 2);
        check(Strategy::MRPolyLin,
              run_mrpolylin(sys, CodingParams<R>::make(2, 2, 4), 2, cluster(4, 3, 3.0, 0.25)).ledger, 4, 3, 2, 2);
    }
}

TEST_CASE("protocol equivalence on small exact systems") {
    std::mt19937_64 rng(6);
    for (std::size_t N = 2; N <= 8; N += 3)
        for (std::size_t n : {2, 4, 6})
            for (std::size_t m : {1, 2, 3}) {
                if (recovery_threshold(m, n) > 31) continue;
                auto sys = oracle::random_exact_system(rng, N, n);
                const auto expected = iterate(sys);
                CHECK(run_baseline(sys, cluster(2, 2)).x == expected);
                const auto K = recovery_threshold(m, n);
                CHECK(run_polylin(sys, CodingParams<R>::make(m, n, K + 1), cluster(K + 1, K)).x == expected);
                for (std::size_t ell = 1; ell <= n; ++ell) {
                    if (n % ell != 0 || (n / ell) % 2 != 0) continue;
                    const auto Kp = recovery_threshold(m, n / ell);
                    auto res = run_mrpolylin(sys, CodingParams<R>::make(m, n / ell, Kp + 2), ell, cluster(Kp + 2, Kp));
                    CHECK(res.x == expected);
                    CHECK(res.ledger.rounds == ell);
                }
            }
}

TEST_CASE("every failure pattern of P-K workers is tolerated") {
    std::mt19937_64 rng(7);
    auto sys = oracle::random_exact_system(rng, 4, 4);
    const auto expected = iterate(sys);
    auto params = CodingParams<R>::make(2, 4, 10);
    std::size_t patterns = 0;
    for_each_subset(10, 3, [&](const std::vector<std::size_t>& failed) {
        auto cfg = cluster(10, 7);
        cfg.straggler.failed_workers = {failed.begin(), failed.end()};
        auto res = run_polylin(sys, params, cfg);
        CHECK(res.x == expected);
        for (std::size_t w : failed)
            CHECK(std::find(res.responder_sets[0].begin(), res.responder_sets[0].end(), w) ==
                  res.responder_sets[0].end());
        ++patterns;
    });
    CHECK(patterns == 120);
}

TEST_CASE("runs are deterministic") {
    std::mt19937_64 rng(8);
    auto sys = oracle::random_exact_system(rng, 6, 4);
    auto cfg = cluster(10, 7, 1.0, 0.01);
    cfg.straggler.kind = StragglerKind::ShiftedExponential;
    cfg.straggler.shift = 0.1;
    cfg.seed = 77;
    cfg.compute_rate = 1e-3;
    auto params = CodingParams<R>::make(2, 4, 10);
    auto a = run_polylin(sys, params, cfg);
    auto b = run_polylin(sys, params, cfg);
    CHECK(a == b);
    CHECK(run_result_to_json(a).dump() == run_result_to_json(b).dump());
    cfg.seed = 78;
    auto c = run_polylin(sys, params, cfg);
    CHECK(c.x == a.x);
    CHECK(c.ledger.sim_time != a.ledger.sim_time);
}

TEST_CASE("round-dominated costs favour fewer rounds") {
    std::mt19937_64 rng(9);
    auto e = zero_start(rng, 8, 4);
    IterationSystem<double> sys{to_float(e.A), to_float(e.Q), to_float(e.y), to_float(e.x0), 4};
    auto poly_cfg = cluster(10, 7, 100.0, 0.001);
    auto base_cfg = cluster(8, 8, 100.0, 0.001);
    auto poly = run_polylin(sys, CodingParams<double>::make(2, 4, 10), poly_cfg);
    auto base = run_baseline(sys, base_cfg);
    CHECK(poly.ledger.sim_time < base.ledger.sim_time);
}

TEST_CASE("ledger json") {
    CostLedger l;
    l.rounds = 3;
    l.words_down = 10;
    l.sim_time = std::numeric_limits<double>::infinity();
    l.comm_cost = 1.5;
    auto j = ledger_to_json(l);
    CHECK(j.at("sim_time").is_null());
    CHECK(j.at("rounds") == 3);
    CHECK(ledger_from_json(j) == l);
    CHECK(ledger_from_json(nlohmann::json::parse(j.dump())) == l);

    RunResult<R> r;
    r.x = Vector<R>{R(1, 2), R(3)};
    r.ledger = l;
    r.responder_sets = {{0, 2}};
    auto rj = run_result_to_json(r);
    CHECK(rj.at("x") == nlohmann::json::array({"1/2", "3"}));
    CHECK(rj.at("responder_sets") == nlohmann::json::parse("[[0,2]]"));
    CHECK(rj.at("completed") == true);
}
