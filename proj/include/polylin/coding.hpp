#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "polylin/linalg.hpp"

namespace polylin {

/// Number of worker outputs needed to decode: 2 m^(n/2) - 1.
std::size_t recovery_threshold(std::size_t m, std::size_t n);

/// Float points are 1 + j/(4P), exact points are j, for j = 1..P.
template <Scalar S>
std::vector<S> default_eval_points(std::size_t P);

/// Chebyshev nodes cos((2j-1) pi / (2P')), j = 1..P, where P' = P for even P
/// and P + 1 for odd P so that no node is zero. Far better conditioned than
/// the default points for Float64; the exact backend gets the binary64 nodes
/// as exact rationals.
template <Scalar S>
std::vector<S> chebyshev_eval_points(std::size_t P);

enum class PointScheme { Default, Chebyshev };

template <Scalar S>
std::vector<S> eval_points(PointScheme scheme, std::size_t P);

/// Split factor m, even iteration count n, worker count P and the P distinct
/// nonzero evaluation points. K is derived from (m, n), never supplied.
template <Scalar S>
struct CodingParams {
    std::size_t m = 1;
    std::size_t n = 2;
    std::size_t K = 1;
    std::size_t P = 1;
    std::vector<S> eval_points;

    static CodingParams make(std::size_t m, std::size_t n, std::size_t P,
                             PointScheme scheme = PointScheme::Default);
    static CodingParams with_points(std::size_t m, std::size_t n, std::vector<S> points);

    void validate() const;
    std::size_t levels() const { return n / 2; }
    /// Index of the coefficient of eta that holds the iterate: m^(n/2) - 1.
    std::size_t target_power() const;
};

enum class PowerOrder { Ascending, Descending };

/// Horner evaluation of sum_j block_j xi^j (ascending) or
/// sum_j block_j xi^(m-1-j) (descending).
template <Scalar S>
Matrix<S> eval_split_poly(const BlockSplit<S>& blocks, const S& xi, PowerOrder order, OpCounter* counter = nullptr);

/// Dense N x N/m form of the identity-block polynomial sum_j I~_j xi^j, where
/// I~_j are the column bands of I. Workers never materialize it.
template <Scalar S>
Matrix<S> dense_identity_poly(const S& xi, std::size_t m, std::size_t N);

/// Applies the identity-block polynomial to a length N/m vector: segment j
/// of the length-N result is scale[j] * v, with scale[j] = xi^j.
template <Scalar S>
Vector<S> apply_identity_poly(std::span<const S> scale, const Vector<S>& v, OpCounter* counter = nullptr);

/// Everything a worker needs for one tower level, evaluated at xi^(m^k).
template <Scalar S>
struct ShardLevel {
    S point;                 ///< xi^(m^k)
    S term_scale;            ///< xi^(m^(n/2) - m^(k+1)), multiplier of this level's s-term
    Matrix<S> eval_A1;       ///< N x N/m
    Matrix<S> eval_A2;       ///< N/m x N
    std::vector<S> scale_I;  ///< point^0 .. point^(m-1)
};

template <Scalar S>
struct ShardBundle {
    std::size_t worker_index = 0;
    S xi;
    std::size_t m = 1;
    std::size_t n = 2;
    std::size_t dim = 0;  ///< padded N
    std::vector<ShardLevel<S>> levels;
    Matrix<S> eval_Q2;  ///< N/m x N

    /// Scalars held by the worker.
    std::uint64_t storage_words() const;
};

/// Master-side pre-processing: holds the block splits of the padded A and Q
/// and produces one shard per evaluation point.
template <Scalar S>
class ShardEncoder {
public:
    ShardEncoder(const Matrix<S>& A, const Matrix<S>& Q, std::size_t m, std::size_t n);

    ShardBundle<S> make(std::size_t worker_index, const S& xi, OpCounter* counter = nullptr) const;

    std::size_t m() const { return m_; }
    std::size_t n() const { return n_; }

private:
    std::size_t m_;
    std::size_t n_;
    std::size_t dim_;
    BlockSplit<S> a_cols_;
    BlockSplit<S> a_rows_;
    BlockSplit<S> q_rows_;
};

template <Scalar S>
ShardBundle<S> make_shard(const Matrix<S>& A, const Matrix<S>& Q, const CodingParams<S>& params,
                          std::size_t worker_index);

/// One worker's evaluation of the coded polynomial.
template <Scalar S>
struct EtaEval {
    S xi;
    Vector<S> value;
};

/// The worker recursion: n matrix-vector steps on the r (x0) and w (y)
/// chains, accumulating the s-terms on even steps. The r chain is skipped
/// when x0 is the zero vector.
template <Scalar S>
EtaEval<S> worker_eta(const ShardBundle<S>& shard, const Vector<S>& x0, const Vector<S>& y,
                      OpCounter* counter = nullptr);

/// Weights c with sum_j c_j f(xi_j) = [xi^target] f for every polynomial f of
/// degree < xis.size().
template <Scalar S>
std::vector<S> lagrange_coefficient_weights(std::span<const S> xis, std::size_t target_power,
                                            OpCounter* counter = nullptr);

/// Weighted sum of the evaluations, truncated to original_n.
template <Scalar S>
Vector<S> combine_evals(std::span<const EtaEval<S>> evals, std::span<const S> weights, std::size_t original_n,
                        OpCounter* counter = nullptr);

/// Recovers A^n x0 + sum_{i=1..n} A^(i-1) Q y from exactly K evaluations.
template <Scalar S>
Vector<S> decode(std::span<const EtaEval<S>> evals, std::size_t m, std::size_t n, std::size_t original_n,
                 OpCounter* counter = nullptr);

/// Length-prefixed little-endian layout:
///   "PLSB" u8:version u8:backend u64:worker u64:m u64:n u64:dim scalar:xi
///   u64:levels { scalar:point scalar:term_scale matrix:A1 matrix:A2 u64:m scalar* }
///   matrix:Q2
/// matrix = u64:rows u64:cols scalar*; a float scalar is 8 bytes of binary64,
/// an exact scalar is u32:length followed by ASCII "p/q".
template <Scalar S>
std::vector<std::uint8_t> serialize_shard(const ShardBundle<S>& shard);

template <Scalar S>
ShardBundle<S> deserialize_shard(std::span<const std::uint8_t> bytes);

}  // namespace polylin
