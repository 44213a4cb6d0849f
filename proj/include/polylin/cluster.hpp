#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "polylin/coding.hpp"
#include "polylin/solver.hpp"

namespace polylin {

enum class StragglerKind { None, ShiftedExponential, Fail };

/// Per-worker, per-round extra delay on top of the compute time. Each
/// (seed, worker, round) triple gets its own generator, so a draw never
/// depends on how many other draws happened before it.
struct StragglerModel {
    StragglerKind kind = StragglerKind::None;
    double shift = 0.0;      ///< shifted exponential: minimum delay
    double rate = 1.0;       ///< shifted exponential: rate of the exponential part
    double fail_prob = 0.0;  ///< fail: per-round failure probability
    /// Workers that never respond, whatever the kind.
    std::set<std::size_t> failed_workers;

    void validate() const;
    /// Delay in simulated seconds; +inf for a failed worker.
    double delay(std::uint64_t seed, std::size_t worker, std::size_t round) const;
};

std::string straggler_kind_name(StragglerKind kind);
StragglerKind parse_straggler_kind(const std::string& name);

struct ClusterConfig {
    std::size_t P = 1;
    std::size_t K = 1;
    double beta1 = 0.0;         ///< cost per communication round
    double beta2 = 0.0;         ///< cost per scalar word moved
    StragglerModel straggler;
    std::uint64_t seed = 0;
    double compute_rate = 0.0;  ///< simulated seconds per scalar multiply

    void validate() const;
};

struct CostLedger {
    std::uint64_t rounds = 0;
    std::uint64_t words_down = 0;    ///< master to worker, max over workers
    std::uint64_t words_up = 0;      ///< worker to master, max over responders
    std::uint64_t worker_mults = 0;  ///< max over workers
    std::uint64_t master_mults = 0;  ///< encoding, decode weights and combination
    std::uint64_t storage_words = 0;  ///< scalars held per worker
    std::uint64_t offline_words = 0;  ///< one-time placement per worker (storage + y)
    double comm_cost = 0.0;          ///< beta1 rounds + beta2 (down + up)
    double sim_time = 0.0;           ///< +inf when the run stalled
    std::uint64_t stragglers_tolerated = 0;

    friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

template <Scalar S>
struct RunResult {
    Vector<S> x;  ///< empty when !completed
    CostLedger ledger;
    std::vector<std::vector<std::size_t>> responder_sets;
    bool completed = true;

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

struct RoundOutcome {
    std::vector<std::size_t> responders;  ///< ascending worker index
    double elapsed = 0.0;                 ///< K-th smallest finish time
    std::vector<double> finish_times;
};

/// Thrown when fewer than K workers finish a round.
class DecodeImpossible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fastest-K selection for one round. finish(w) = compute_rate * mults[w] +
/// delay(seed, w, round); ties go to the lower worker index.
RoundOutcome simulate_round(std::span<const std::uint64_t> mults, const ClusterConfig& cfg, std::size_t round);

/// Row-partitioned recursion; needs K = P and stalls on any failure.
template <Scalar S>
RunResult<S> run_baseline(const IterationSystem<S>& sys, const ClusterConfig& cfg);

/// One coded round over params.P workers. Requires params.n = sys.n and
/// cfg.K = params.K.
template <Scalar S>
RunResult<S> run_polylin(const IterationSystem<S>& sys, const CodingParams<S>& params, const ClusterConfig& cfg);

/// ell coded phases of n/ell iterations each. `phase` carries the per-phase
/// parameters (m, n/ell); cfg.K must equal phase.K.
template <Scalar S>
RunResult<S> run_mrpolylin(const IterationSystem<S>& sys, const CodingParams<S>& phase, std::size_t ell,
                           const ClusterConfig& cfg);

enum class Strategy { Baseline, PolyLin, MRPolyLin };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Closed-form ledger. N is rounded up to a multiple of P (baseline) or m
/// (coded strategies) first. m is the split factor of each coded phase and
/// must satisfy K = 2 m^(n/(2 ell)) - 1; it is ignored for the baseline.
/// sim_time is left at zero.
CostLedger predicted_costs(Strategy strategy, std::size_t N, std::size_t P, std::size_t K, std::size_t n,
                           std::size_t ell, std::size_t m, double beta1, double beta2);

/// Flat object; non-finite times are written as null.
nlohmann::json ledger_to_json(const CostLedger& ledger);
CostLedger ledger_from_json(const nlohmann::json& j);

/// Ledger keys plus "completed", "responder_sets" and "x" (numbers for
/// float, "p/q" strings for exact).
template <Scalar S>
nlohmann::json run_result_to_json(const RunResult<S>& result);

}  // namespace polylin
