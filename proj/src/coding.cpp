#include "polylin/coding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polylin {

namespace {

void require_even(std::size_t n) {
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("iteration count n must be even and at least 2 (got " + std::to_string(n) + ")");
    }
}

template <Scalar S>
void require_distinct(std::span<const S> xis) {
    for (std::size_t i = 0; i < xis.size(); ++i)
        for (std::size_t j = i + 1; j < xis.size(); ++j)
            if (xis[i] == xis[j]) {
                throw std::invalid_argument("evaluation points must be distinct (duplicate at positions " +
                                            std::to_string(i) + " and " + std::to_string(j) + ")");
            }
}

}  // namespace

std::size_t recovery_threshold(std::size_t m, std::size_t n) {
    if (m == 0) throw std::invalid_argument("split factor m must be at least 1");
    require_even(n);
    return 2 * ipow(m, n / 2) - 1;
}

template <Scalar S>
std::vector<S> default_eval_points(std::size_t P) {
    std::vector<S> points;
    points.reserve(P);
    for (std::size_t j = 1; j <= P; ++j) {
        if constexpr (std::is_same_v<S, double>) {
            points.push_back(1.0 + static_cast<double>(j) / (4.0 * static_cast<double>(P)));
        } else {
            points.push_back(ScalarTraits<S>::from_int(static_cast<std::int64_t>(j)));
        }
    }
    return points;
}

template <Scalar S>
std::vector<S> chebyshev_eval_points(std::size_t P) {
    const double denom = 2.0 * static_cast<double>(P % 2 == 0 ? P : P + 1);
    std::vector<S> points;
    points.reserve(P);
    for (std::size_t j = 1; j <= P; ++j) {
        const double node = std::cos(static_cast<double>(2 * j - 1) * std::numbers::pi / denom);
        points.push_back(ScalarTraits<S>::from_double(node));
    }
    return points;
}

template <Scalar S>
std::vector<S> eval_points(PointScheme scheme, std::size_t P) {
    return scheme == PointScheme::Chebyshev ? chebyshev_eval_points<S>(P) : default_eval_points<S>(P);
}

template <Scalar S>
CodingParams<S> CodingParams<S>::make(std::size_t m, std::size_t n, std::size_t P, PointScheme scheme) {
    return with_points(m, n, polylin::eval_points<S>(scheme, P));
}

template <Scalar S>
CodingParams<S> CodingParams<S>::with_points(std::size_t m, std::size_t n, std::vector<S> points) {
    CodingParams params;
    params.m = m;
    params.n = n;
    params.K = recovery_threshold(m, n);
    params.P = points.size();
    params.eval_points = std::move(points);
    params.validate();
    return params;
}

template <Scalar S>
void CodingParams<S>::validate() const {
    if (K != recovery_threshold(m, n)) {
        throw std::invalid_argument("K must equal 2 m^(n/2) - 1 = " + std::to_string(recovery_threshold(m, n)) +
                                    " (got " + std::to_string(K) + ")");
    }
    if (P < K) {
        throw std::invalid_argument("worker count P = " + std::to_string(P) + " is below the recovery threshold K = " +
                                    std::to_string(K));
    }
    if (eval_points.size() != P) throw std::invalid_argument("need exactly P evaluation points");
    for (const S& xi : eval_points)
        if (ScalarTraits<S>::is_zero(xi)) throw std::invalid_argument("evaluation points must be nonzero");
    require_distinct<S>(eval_points);
}

template <Scalar S>
std::size_t CodingParams<S>::target_power() const {
    return ipow(m, n / 2) - 1;
}

template <Scalar S>
Matrix<S> eval_split_poly(const BlockSplit<S>& blocks, const S& xi, PowerOrder order, OpCounter* counter) {
    const std::size_t m = blocks.m();
    if (m == 0) throw std::invalid_argument("eval_split_poly: empty split");
    // Horner from the block carrying the highest power.
    auto block_of_power = [&](std::size_t p) -> const Matrix<S>& {
        return order == PowerOrder::Ascending ? blocks.blocks[p] : blocks.blocks[m - 1 - p];
    };
    Matrix<S> acc = block_of_power(m - 1);
    for (std::size_t p = m - 1; p-- > 0;) {
        acc *= xi;
        count(counter, static_cast<std::uint64_t>(acc.rows()) * acc.cols());
        acc += block_of_power(p);
    }
    return acc;
}

template <Scalar S>
Matrix<S> dense_identity_poly(const S& xi, std::size_t m, std::size_t N) {
    if (m == 0 || N % m != 0) throw DimensionError("dense_identity_poly: m must divide N");
    const std::size_t band = N / m;
    Matrix<S> out(N, band);
    S power = ScalarTraits<S>::one();
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t r = 0; r < band; ++r) out(j * band + r, r) = power;
        power *= xi;
    }
    return out;
}

template <Scalar S>
Vector<S> apply_identity_poly(std::span<const S> scale, const Vector<S>& v, OpCounter* counter) {
    const std::size_t band = v.size();
    Vector<S> out(band * scale.size());
    for (std::size_t j = 0; j < scale.size(); ++j)
        for (std::size_t r = 0; r < band; ++r) out[j * band + r] = scale[j] * v[r];
    count(counter, static_cast<std::uint64_t>(out.size()));
    return out;
}

template <Scalar S>
std::uint64_t ShardBundle<S>::storage_words() const {
    std::uint64_t words = static_cast<std::uint64_t>(eval_Q2.rows()) * eval_Q2.cols();
    for (const auto& level : levels) {
        words += static_cast<std::uint64_t>(level.eval_A1.rows()) * level.eval_A1.cols();
        words += static_cast<std::uint64_t>(level.eval_A2.rows()) * level.eval_A2.cols();
        words += level.scale_I.size();
    }
    return words;
}

template <Scalar S>
ShardEncoder<S>::ShardEncoder(const Matrix<S>& A, const Matrix<S>& Q, std::size_t m, std::size_t n)
    : m_(m), n_(n), dim_(A.rows()) {
    if (!A.is_square() || Q.rows() != dim_ || Q.cols() != dim_) {
        throw DimensionError("shard encoder: A and Q must be square and of equal size");
    }
    if (m == 0) throw std::invalid_argument("split factor m must be at least 1");
    require_even(n);
    a_cols_ = split_vertical(A, m);
    a_rows_ = split_horizontal(A, m);
    q_rows_ = split_horizontal(Q, m);
}

template <Scalar S>
ShardBundle<S> ShardEncoder<S>::make(std::size_t worker_index, const S& xi, OpCounter* counter) const {
    const std::size_t L = n_ / 2;
    const std::uint64_t top = ipow(m_, L);
    ShardBundle<S> shard;
    shard.worker_index = worker_index;
    shard.xi = xi;
    shard.m = m_;
    shard.n = n_;
    shard.dim = dim_;
    shard.levels.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        ShardLevel<S> level;
        level.point = pow_int(xi, ipow(m_, k));
        level.term_scale = pow_int(xi, top - ipow(m_, k + 1));
        level.eval_A1 = eval_split_poly(a_cols_, level.point, PowerOrder::Ascending, counter);
        level.eval_A2 = eval_split_poly(a_rows_, level.point, PowerOrder::Descending, counter);
        S power = ScalarTraits<S>::one();
        for (std::size_t j = 0; j < m_; ++j) {
            level.scale_I.push_back(power);
            power *= level.point;
        }
        shard.levels.push_back(std::move(level));
    }
    shard.eval_Q2 = eval_split_poly(q_rows_, xi, PowerOrder::Descending, counter);
    return shard;
}

template <Scalar S>
ShardBundle<S> make_shard(const Matrix<S>& A, const Matrix<S>& Q, const CodingParams<S>& params,
                          std::size_t worker_index) {
    params.validate();
    if (worker_index >= params.P) throw std::out_of_range("make_shard: worker index beyond P");
    return ShardEncoder<S>(A, Q, params.m, params.n).make(worker_index, params.eval_points[worker_index]);
}

template <Scalar S>
EtaEval<S> worker_eta(const ShardBundle<S>& shard, const Vector<S>& x0, const Vector<S>& y, OpCounter* counter) {
    require_even(shard.n);
    const std::size_t L = shard.levels.size();
    if (L != shard.n / 2) throw std::invalid_argument("worker_eta: shard has wrong number of levels");
    if (x0.size() != shard.dim || y.size() != shard.dim) {
        throw DimensionError("worker_eta: x0 and y must match the padded dimension " + std::to_string(shard.dim));
    }

    // y chain: w alternates N/m (after an A2/Q2 step) and N (after an A1 step).
    Vector<S> w_half = mat_vec(shard.eval_Q2, y, counter);
    Vector<S> w = mat_vec(shard.levels[0].eval_A1, w_half, counter);
    Vector<S> s(shard.dim);
    for (std::size_t k = 0; k < L; ++k) {
        const auto& level = shard.levels[k];
        if (k > 0) {
            w_half = mat_vec(level.eval_A2, w, counter);
            w = mat_vec(level.eval_A1, w_half, counter);
        }
        Vector<S> term = w + apply_identity_poly<S>(level.scale_I, w_half, counter);
        if (k + 1 < L) {
            term *= level.term_scale;
            count(counter, term.size());
        }
        s += term;
    }

    if (x0.is_zero()) return {shard.xi, std::move(s)};

    Vector<S> r = x0;
    for (const auto& level : shard.levels) {
        r = mat_vec(level.eval_A1, mat_vec(level.eval_A2, r, counter), counter);
    }
    return {shard.xi, r + s};
}

template <Scalar S>
std::vector<S> lagrange_coefficient_weights(std::span<const S> xis, std::size_t target_power, OpCounter* counter) {
    const std::size_t K = xis.size();
    if (K == 0) throw std::invalid_argument("lagrange_coefficient_weights: no points");
    if (target_power >= K) {
        throw std::invalid_argument("lagrange_coefficient_weights: target power " + std::to_string(target_power) +
                                    " needs more than " + std::to_string(K) + " points");
    }
    require_distinct(xis);

    // master = prod_k (t - xi_k), ascending coefficients
    std::vector<S> master{ScalarTraits<S>::one()};
    for (const S& root : xis) {
        std::vector<S> next(master.size() + 1, ScalarTraits<S>::zero());
        for (std::size_t i = 0; i < master.size(); ++i) {
            next[i + 1] += master[i];
            next[i] -= root * master[i];
        }
        master = std::move(next);
    }
    count(counter, static_cast<std::uint64_t>(K) * (K + 1) / 2);

    std::vector<S> weights;
    weights.reserve(K);
    std::vector<S> quotient(K);
    for (std::size_t j = 0; j < K; ++j) {
        // master / (t - xi_j) by synthetic division from the top
        quotient[K - 1] = master[K];
        for (std::size_t i = K - 1; i > 0; --i) quotient[i - 1] = master[i] + xis[j] * quotient[i];
        S denom = ScalarTraits<S>::one();
        for (std::size_t k = 0; k < K; ++k)
            if (k != j) denom *= xis[j] - xis[k];
        weights.push_back(quotient[target_power] / denom);
    }
    count(counter, static_cast<std::uint64_t>(K) * (2 * K - 1));
    return weights;
}

template <Scalar S>
Vector<S> combine_evals(std::span<const EtaEval<S>> evals, std::span<const S> weights, std::size_t original_n,
                        OpCounter* counter) {
    if (evals.size() != weights.size()) throw std::invalid_argument("combine_evals: one weight per evaluation");
    Vector<S> out(original_n);
    for (std::size_t j = 0; j < evals.size(); ++j) {
        const auto& value = evals[j].value;
        if (value.size() < original_n) throw DimensionError("combine_evals: evaluation shorter than original N");
        for (std::size_t i = 0; i < original_n; ++i) out[i] += weights[j] * value[i];
    }
    count(counter, static_cast<std::uint64_t>(original_n) * evals.size());
    return out;
}

template <Scalar S>
Vector<S> decode(std::span<const EtaEval<S>> evals, std::size_t m, std::size_t n, std::size_t original_n,
                 OpCounter* counter) {
    const std::size_t K = recovery_threshold(m, n);
    if (evals.size() != K) {
        throw std::invalid_argument("decode needs exactly K = " + std::to_string(K) + " evaluations, got " +
                                    std::to_string(evals.size()));
    }
    std::vector<S> xis;
    xis.reserve(K);
    for (const auto& e : evals) xis.push_back(e.xi);
    const auto weights = lagrange_coefficient_weights<S>(xis, ipow(m, n / 2) - 1, counter);
    return combine_evals<S>(evals, weights, original_n, counter);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::uint8_t kShardVersion = 1;

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void raw(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    template <Scalar S>
    void scalar(const S& v) {
        if constexpr (std::is_same_v<S, double>) {
            u64(std::bit_cast<std::uint64_t>(v));
        } else {
            const std::string text = ScalarTraits<S>::format(v);
            u32(static_cast<std::uint32_t>(text.size()));
            raw(text);
        }
    }

    template <Scalar S>
    void matrix(const Matrix<S>& M) {
        u64(M.rows());
        u64(M.cols());
        for (const S& v : M.values()) scalar(v);
    }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::string raw(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    template <Scalar S>
    S scalar() {
        if constexpr (std::is_same_v<S, double>) {
            return std::bit_cast<double>(u64());
        } else {
            return ScalarTraits<S>::parse(raw(u32()));
        }
    }

    template <Scalar S>
    Matrix<S> matrix() {
        const std::uint64_t rows = u64();
        const std::uint64_t cols = u64();
        if (cols != 0 && rows > remaining() / cols) throw std::runtime_error("shard payload: matrix too large");
        std::vector<S> data;
        data.reserve(rows * cols);
        for (std::uint64_t i = 0; i < rows * cols; ++i) data.push_back(scalar<S>());
        return Matrix<S>(rows, cols, std::move(data));
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw std::runtime_error("shard payload truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

template <Scalar S>
std::vector<std::uint8_t> serialize_shard(const ShardBundle<S>& shard) {
    ByteWriter out;
    out.raw("PLSB");
    out.u8(kShardVersion);
    out.u8(static_cast<std::uint8_t>(ScalarTraits<S>::backend));
    out.u64(shard.worker_index);
    out.u64(shard.m);
    out.u64(shard.n);
    out.u64(shard.dim);
    out.scalar(shard.xi);
    out.u64(shard.levels.size());
    for (const auto& level : shard.levels) {
        out.scalar(level.point);
        out.scalar(level.term_scale);
        out.matrix(level.eval_A1);
        out.matrix(level.eval_A2);
        out.u64(level.scale_I.size());
        for (const S& v : level.scale_I) out.scalar(v);
    }
    out.matrix(shard.eval_Q2);
    return out.take();
}

template <Scalar S>
ShardBundle<S> deserialize_shard(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.raw(4) != "PLSB") throw std::runtime_error("shard payload: bad magic");
    if (in.u8() != kShardVersion) throw std::runtime_error("shard payload: unsupported version");
    if (in.u8() != static_cast<std::uint8_t>(ScalarTraits<S>::backend)) {
        throw std::runtime_error("shard payload: scalar backend mismatch");
    }
    ShardBundle<S> shard;
    shard.worker_index = in.u64();
    shard.m = in.u64();
    shard.n = in.u64();
    shard.dim = in.u64();
    shard.xi = in.scalar<S>();
    const std::uint64_t levels = in.u64();
    if (levels > in.remaining()) throw std::runtime_error("shard payload: level count too large");
    for (std::uint64_t k = 0; k < levels; ++k) {
        ShardLevel<S> level;
        level.point = in.scalar<S>();
        level.term_scale = in.scalar<S>();
        level.eval_A1 = in.matrix<S>();
        level.eval_A2 = in.matrix<S>();
        const std::uint64_t count = in.u64();
        if (count > in.remaining()) throw std::runtime_error("shard payload: scale count too large");
        for (std::uint64_t j = 0; j < count; ++j) level.scale_I.push_back(in.scalar<S>());
        shard.levels.push_back(std::move(level));
    }
    shard.eval_Q2 = in.matrix<S>();
    if (in.remaining() != 0) throw std::runtime_error("shard payload: trailing bytes");
    return shard;
}

#define POLYLIN_INSTANTIATE(S)                                                                                  \
    template std::vector<S> default_eval_points<S>(std::size_t);                                                 \
    template std::vector<S> chebyshev_eval_points<S>(std::size_t);                                               \
    template std::vector<S> eval_points<S>(PointScheme, std::size_t);                                            \
    template struct CodingParams<S>;                                                                             \
    template Matrix<S> eval_split_poly(const BlockSplit<S>&, const S&, PowerOrder, OpCounter*);                  \
    template Matrix<S> dense_identity_poly(const S&, std::size_t, std::size_t);                                  \
    template Vector<S> apply_identity_poly(std::span<const S>, const Vector<S>&, OpCounter*);                    \
    template struct ShardBundle<S>;                                                                              \
    template class ShardEncoder<S>;                                                                              \
    template ShardBundle<S> make_shard(const Matrix<S>&, const Matrix<S>&, const CodingParams<S>&, std::size_t); \
    template EtaEval<S> worker_eta(const ShardBundle<S>&, const Vector<S>&, const Vector<S>&, OpCounter*);       \
    template std::vector<S> lagrange_coefficient_weights(std::span<const S>, std::size_t, OpCounter*);           \
    template Vector<S> combine_evals(std::span<const EtaEval<S>>, std::span<const S>, std::size_t, OpCounter*);  \
    template Vector<S> decode(std::span<const EtaEval<S>>, std::size_t, std::size_t, std::size_t, OpCounter*);   \
    template std::vector<std::uint8_t> serialize_shard(const ShardBundle<S>&);                                   \
    template ShardBundle<S> deserialize_shard<S>(std::span<const std::uint8_t>);

POLYLIN_INSTANTIATE(double)
POLYLIN_INSTANTIATE(Rational)

#undef POLYLIN_INSTANTIATE

}  // namespace polylin
