#include "polylin/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace polylin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

double uniform01(std::uint64_t seed, std::size_t worker, std::size_t round) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(worker), static_cast<std::uint32_t>(round)};
    std::mt19937_64 gen(seq);
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::uint64_t max_of(const std::vector<std::uint64_t>& v) {
    return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

void finish_ledger(CostLedger& ledger, const ClusterConfig& cfg) {
    ledger.comm_cost = cfg.beta1 * static_cast<double>(ledger.rounds) +
                       cfg.beta2 * static_cast<double>(ledger.words_down + ledger.words_up);
}

/// Shared by run_polylin (one phase) and run_mrpolylin.
template <Scalar S>
RunResult<S> run_coded(const IterationSystem<S>& sys, const CodingParams<S>& phase, std::size_t ell,
                       const ClusterConfig& cfg) {
    cfg.validate();
    phase.validate();
    sys.validate(true);
    if (ell == 0 || sys.n % ell != 0) {
        throw std::invalid_argument("ell = " + std::to_string(ell) + " must divide n = " + std::to_string(sys.n));
    }
    if (sys.n / ell != phase.n) {
        throw std::invalid_argument("phase parameters are for n = " + std::to_string(phase.n) + ", expected n/ell = " +
                                    std::to_string(sys.n / ell));
    }
    if (cfg.P != phase.P) {
        throw std::invalid_argument("cluster has P = " + std::to_string(cfg.P) + " workers but " +
                                    std::to_string(phase.P) + " evaluation points were given");
    }
    if (cfg.K != phase.K) {
        throw std::invalid_argument("cluster K = " + std::to_string(cfg.K) + " differs from the recovery threshold " +
                                    std::to_string(phase.K));
    }

    const auto padded = zero_pad(sys.A, sys.Q, sys.x0, sys.y, phase.m);
    const std::size_t N = padded.A.rows();

    OpCounter master;
    ShardEncoder<S> encoder(padded.A, padded.Q, phase.m, phase.n);
    std::vector<ShardBundle<S>> shards;
    shards.reserve(phase.P);
    for (std::size_t w = 0; w < phase.P; ++w) shards.push_back(encoder.make(w, phase.eval_points[w], &master));

    RunResult<S> result;
    CostLedger& ledger = result.ledger;
    for (const auto& shard : shards) ledger.storage_words = std::max(ledger.storage_words, shard.storage_words());
    ledger.offline_words = ledger.storage_words + N;
    ledger.stragglers_tolerated = phase.P - phase.K;

    std::vector<std::uint64_t> worker_total(phase.P, 0);
    Vector<S> x = padded.x0;
    for (std::size_t round = 0; round < ell; ++round) {
        std::vector<EtaEval<S>> evals(phase.P);
        std::vector<std::uint64_t> mults(phase.P, 0);
        for (std::size_t w = 0; w < phase.P; ++w) {
            OpCounter c;
            evals[w] = worker_eta(shards[w], x, padded.y, &c);
            mults[w] = c.mults;
            worker_total[w] += c.mults;
        }
        const RoundOutcome outcome = simulate_round(mults, cfg, round);
        std::vector<EtaEval<S>> chosen;
        chosen.reserve(outcome.responders.size());
        for (std::size_t w : outcome.responders) chosen.push_back(evals[w]);
        x = decode<S>(chosen, phase.m, phase.n, N, &master);

        ledger.rounds += 1;
        ledger.words_down += N;
        ledger.words_up += N;
        ledger.sim_time += cfg.beta1 + cfg.beta2 * static_cast<double>(2 * N) + outcome.elapsed;
        result.responder_sets.push_back(outcome.responders);
    }
    result.x = truncate(x, padded.original_n);
    ledger.worker_mults = max_of(worker_total);
    ledger.master_mults = master.mults;
    finish_ledger(ledger, cfg);
    return result;
}

}  // namespace

void StragglerModel::validate() const {
    switch (kind) {
        case StragglerKind::None:
            break;
        case StragglerKind::ShiftedExponential:
            if (!finite_non_negative(shift)) throw std::invalid_argument("straggler shift must be finite and >= 0");
            if (!(std::isfinite(rate) && rate > 0.0)) throw std::invalid_argument("straggler rate must be > 0");
            break;
        case StragglerKind::Fail:
            if (!(fail_prob >= 0.0 && fail_prob <= 1.0)) {
                throw std::invalid_argument("failure probability must lie in [0, 1]");
            }
            break;
    }
}

double StragglerModel::delay(std::uint64_t seed, std::size_t worker, std::size_t round) const {
    if (failed_workers.contains(worker)) return kInf;
    switch (kind) {
        case StragglerKind::None:
            return 0.0;
        case StragglerKind::ShiftedExponential:
            return shift - std::log1p(-uniform01(seed, worker, round)) / rate;
        case StragglerKind::Fail:
            return uniform01(seed, worker, round) < fail_prob ? kInf : 0.0;
    }
    return 0.0;
}

std::string straggler_kind_name(StragglerKind kind) {
    switch (kind) {
        case StragglerKind::None:
            return "none";
        case StragglerKind::ShiftedExponential:
            return "shifted_exponential";
        case StragglerKind::Fail:
            return "fail";
    }
    return "none";
}

StragglerKind parse_straggler_kind(const std::string& name) {
    if (name == "none") return StragglerKind::None;
    if (name == "shifted_exponential" || name == "shifted-exponential") return StragglerKind::ShiftedExponential;
    if (name == "fail") return StragglerKind::Fail;
    throw std::invalid_argument("unknown straggler kind '" + name + "' (none, shifted_exponential, fail)");
}

void ClusterConfig::validate() const {
    if (P == 0) throw std::invalid_argument("need at least one worker");
    if (K < 1 || K > P) {
        throw std::invalid_argument("K = " + std::to_string(K) + " must satisfy 1 <= K <= P = " + std::to_string(P));
    }
    if (!finite_non_negative(beta1) || !finite_non_negative(beta2)) {
        throw std::invalid_argument("beta1 and beta2 must be finite and >= 0");
    }
    if (!finite_non_negative(compute_rate)) throw std::invalid_argument("compute_rate must be finite and >= 0");
    for (std::size_t w : straggler.failed_workers)
        if (w >= P) throw std::invalid_argument("failed worker index " + std::to_string(w) + " is out of range");
    straggler.validate();
}

RoundOutcome simulate_round(std::span<const std::uint64_t> mults, const ClusterConfig& cfg, std::size_t round) {
    cfg.validate();
    if (mults.size() != cfg.P) {
        throw std::invalid_argument("simulate_round: got " + std::to_string(mults.size()) + " task costs for P = " +
                                    std::to_string(cfg.P));
    }
    RoundOutcome out;
    out.finish_times.resize(cfg.P);
    for (std::size_t w = 0; w < cfg.P; ++w) {
        out.finish_times[w] =
            cfg.compute_rate * static_cast<double>(mults[w]) + cfg.straggler.delay(cfg.seed, w, round);
    }
    std::vector<std::size_t> order(cfg.P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.finish_times[a] < out.finish_times[b]; });
    const auto finished = static_cast<std::size_t>(
        std::count_if(out.finish_times.begin(), out.finish_times.end(), [](double t) { return std::isfinite(t); }));
    if (finished < cfg.K) {
        throw DecodeImpossible("round " + std::to_string(round) + ": only " + std::to_string(finished) + " of " +
                               std::to_string(cfg.P) + " workers finished, need " + std::to_string(cfg.K));
    }
    out.responders.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.K));
    out.elapsed = out.finish_times[order[cfg.K - 1]];
    std::sort(out.responders.begin(), out.responders.end());
    return out;
}

template <Scalar S>
RunResult<S> run_baseline(const IterationSystem<S>& sys, const ClusterConfig& cfg) {
    cfg.validate();
    sys.validate(false);
    if (cfg.K != cfg.P) {
        throw std::invalid_argument("baseline waits for every worker: K must equal P (got K = " +
                                    std::to_string(cfg.K) + ", P = " + std::to_string(cfg.P) + ")");
    }
    const std::size_t P = cfg.P;
    const auto padded = zero_pad(sys.A, sys.Q, sys.x0, sys.y, P);
    const std::size_t N = padded.A.rows();
    const std::size_t band = N / P;
    const auto a_rows = split_horizontal(padded.A, P);
    const auto q_rows = split_horizontal(padded.Q, P);

    RunResult<S> result;
    CostLedger& ledger = result.ledger;
    ledger.storage_words = 2 * static_cast<std::uint64_t>(band) * N;
    ledger.offline_words = ledger.storage_words + N;

    // Q_i y never changes; each worker computes it once and keeps it.
    std::vector<Vector<S>> qy(P);
    std::vector<std::uint64_t> worker_total(P, 0);
    Vector<S> x = padded.x0;
    for (std::size_t round = 0; round < sys.n; ++round) {
        std::vector<Vector<S>> segments(P);
        std::vector<std::uint64_t> mults(P, 0);
        for (std::size_t w = 0; w < P; ++w) {
            OpCounter c;
            if (round == 0) qy[w] = mat_vec(q_rows.blocks[w], padded.y, &c);
            segments[w] = x.is_zero() ? qy[w] : mat_vec(a_rows.blocks[w], x, &c) + qy[w];
            mults[w] = c.mults;
            worker_total[w] += c.mults;
        }
        ledger.rounds += 1;
        ledger.words_down += N;
        RoundOutcome outcome;
        try {
            outcome = simulate_round(mults, cfg, round);
        } catch (const DecodeImpossible&) {
            ledger.sim_time = kInf;
            ledger.worker_mults = max_of(worker_total);
            finish_ledger(ledger, cfg);
            result.completed = false;
            result.x = Vector<S>();
            return result;
        }
        ledger.words_up += band;
        ledger.sim_time += cfg.beta1 + cfg.beta2 * static_cast<double>(N + band) + outcome.elapsed;
        result.responder_sets.push_back(outcome.responders);
        for (std::size_t w = 0; w < P; ++w)
            for (std::size_t r = 0; r < band; ++r) x[w * band + r] = segments[w][r];
    }
    result.x = truncate(x, padded.original_n);
    ledger.worker_mults = max_of(worker_total);
    finish_ledger(ledger, cfg);
    return result;
}

template <Scalar S>
RunResult<S> run_polylin(const IterationSystem<S>& sys, const CodingParams<S>& params, const ClusterConfig& cfg) {
    return run_coded(sys, params, 1, cfg);
}

template <Scalar S>
RunResult<S> run_mrpolylin(const IterationSystem<S>& sys, const CodingParams<S>& phase, std::size_t ell,
                           const ClusterConfig& cfg) {
    return run_coded(sys, phase, ell, cfg);
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Baseline:
            return "baseline";
        case Strategy::PolyLin:
            return "polylin";
        case Strategy::MRPolyLin:
            return "mrpolylin";
    }
    return "baseline";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "baseline") return Strategy::Baseline;
    if (name == "polylin") return Strategy::PolyLin;
    if (name == "mrpolylin") return Strategy::MRPolyLin;
    throw std::invalid_argument("unknown strategy '" + name + "' (baseline, polylin, mrpolylin)");
}

CostLedger predicted_costs(Strategy strategy, std::size_t N, std::size_t P, std::size_t K, std::size_t n,
                           std::size_t ell, std::size_t m, double beta1, double beta2) {
    if (N == 0 || P == 0 || n == 0) throw std::invalid_argument("predicted_costs: N, P and n must be positive");
    if (K < 1 || K > P) throw std::invalid_argument("predicted_costs: need 1 <= K <= P");
    CostLedger c;
    if (strategy == Strategy::Baseline) {
        if (K != P) throw std::invalid_argument("predicted_costs: baseline needs K = P");
        const std::uint64_t Np = round_up(N, P);
        c.rounds = n;
        c.words_down = n * Np;
        c.words_up = n * Np / P;
        c.worker_mults = n * Np * Np / P;
        c.storage_words = Np * Np / P;
        c.offline_words = c.storage_words + Np;
        c.stragglers_tolerated = 0;
    } else {
        if (strategy == Strategy::PolyLin) ell = 1;
        if (ell == 0 || n % ell != 0 || (n / ell) % 2 != 0) {
            throw std::invalid_argument("predicted_costs: ell must divide n with n/ell even");
        }
        if (m == 0) throw std::invalid_argument("predicted_costs: split factor m must be positive");
        if (K != recovery_threshold(m, n / ell)) {
            throw std::invalid_argument("predicted_costs: K = " + std::to_string(K) + " is not 2 m^(n/(2 ell)) - 1 = " +
                                        std::to_string(recovery_threshold(m, n / ell)));
        }
        const std::uint64_t Np = round_up(N, m);
        c.rounds = ell;
        c.words_down = ell * Np;
        c.words_up = ell * Np;
        c.worker_mults = n * Np * Np / m;
        c.storage_words = (n / ell + 1) * Np * Np / m;
        c.offline_words = c.storage_words + Np;
        c.stragglers_tolerated = P - K;
    }
    c.comm_cost = beta1 * static_cast<double>(c.rounds) + beta2 * static_cast<double>(c.words_down + c.words_up);
    return c;
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_or_inf(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

}  // namespace

nlohmann::json ledger_to_json(const CostLedger& l) {
    return {{"rounds", l.rounds},
            {"words_down", l.words_down},
            {"words_up", l.words_up},
            {"worker_mults", l.worker_mults},
            {"master_mults", l.master_mults},
            {"storage_words", l.storage_words},
            {"offline_words", l.offline_words},
            {"comm_cost", number_or_null(l.comm_cost)},
            {"sim_time", number_or_null(l.sim_time)},
            {"stragglers_tolerated", l.stragglers_tolerated}};
}

CostLedger ledger_from_json(const nlohmann::json& j) {
    CostLedger l;
    l.rounds = j.at("rounds").get<std::uint64_t>();
    l.words_down = j.at("words_down").get<std::uint64_t>();
    l.words_up = j.at("words_up").get<std::uint64_t>();
    l.worker_mults = j.at("worker_mults").get<std::uint64_t>();
    l.master_mults = j.at("master_mults").get<std::uint64_t>();
    l.storage_words = j.at("storage_words").get<std::uint64_t>();
    l.offline_words = j.at("offline_words").get<std::uint64_t>();
    l.comm_cost = number_or_inf(j.at("comm_cost"));
    l.sim_time = number_or_inf(j.at("sim_time"));
    l.stragglers_tolerated = j.at("stragglers_tolerated").get<std::uint64_t>();
    return l;
}

template <Scalar S>
nlohmann::json run_result_to_json(const RunResult<S>& result) {
    nlohmann::json j = ledger_to_json(result.ledger);
    j["completed"] = result.completed;
    j["responder_sets"] = result.responder_sets;
    nlohmann::json x = nlohmann::json::array();
    for (const S& v : result.x) {
        if constexpr (std::is_same_v<S, double>) {
            x.push_back(number_or_null(v));
        } else {
            x.push_back(ScalarTraits<S>::format(v));
        }
    }
    j["x"] = std::move(x);
    return j;
}

#define POLYLIN_INSTANTIATE(S)                                                                                    \
    template RunResult<S> run_baseline(const IterationSystem<S>&, const ClusterConfig&);                          \
    template RunResult<S> run_polylin(const IterationSystem<S>&, const CodingParams<S>&, const ClusterConfig&);   \
    template RunResult<S> run_mrpolylin(const IterationSystem<S>&, const CodingParams<S>&, std::size_t,           \
                                        const ClusterConfig&);                                                    \
    template nlohmann::json run_result_to_json(const RunResult<S>&);

POLYLIN_INSTANTIATE(double)
POLYLIN_INSTANTIATE(Rational)

#undef POLYLIN_INSTANTIATE

}  // namespace polylin
