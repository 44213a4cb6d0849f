#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polylin/scalar.hpp"

namespace polylin {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scalar-multiply tally. Each simulated worker owns one; nothing is shared.
struct OpCounter {
    std::uint64_t mults = 0;
    void add(std::uint64_t n) { mults += n; }
};

inline void count(OpCounter* counter, std::uint64_t n) {
    if (counter != nullptr) counter->add(n);
}

template <Scalar S>
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t len) : data_(len, ScalarTraits<S>::zero()) {}
    explicit Vector(std::vector<S> data) : data_(std::move(data)) {}
    Vector(std::initializer_list<S> init) : data_(init) {}

    std::size_t size() const { return data_.size(); }
    S& operator[](std::size_t i) { return data_[i]; }
    const S& operator[](std::size_t i) const { return data_[i]; }
    std::span<S> span() { return data_; }
    std::span<const S> span() const { return data_; }
    const std::vector<S>& values() const { return data_; }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const S& v) { return ScalarTraits<S>::is_zero(v); });
    }

    Vector& operator+=(const Vector& rhs) {
        check_same(rhs);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
        return *this;
    }
    Vector& operator-=(const Vector& rhs) {
        check_same(rhs);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
        return *this;
    }
    Vector& operator*=(const S& factor) {
        for (auto& v : data_) v *= factor;
        return *this;
    }
    friend Vector operator+(Vector lhs, const Vector& rhs) { return lhs += rhs; }
    friend Vector operator-(Vector lhs, const Vector& rhs) { return lhs -= rhs; }
    friend Vector operator*(const S& factor, Vector v) { return v *= factor; }

    friend bool operator==(const Vector& lhs, const Vector& rhs) { return lhs.data_ == rhs.data_; }

private:
    void check_same(const Vector& rhs) const {
        if (rhs.size() != size()) {
            throw DimensionError("vector length mismatch: " + std::to_string(size()) + " vs " +
                                 std::to_string(rhs.size()));
        }
    }

    std::vector<S> data_;
};

/// Dense row-major matrix.
template <Scalar S>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, ScalarTraits<S>::zero()) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<S> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix payload has " + std::to_string(data_.size()) + " entries, expected " +
                                 std::to_string(rows_ * cols_));
        }
    }
    /// Row-wise literal, e.g. {{2, 1}, {1, 3}}.
    Matrix(std::initializer_list<std::initializer_list<S>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_) throw DimensionError("ragged matrix literal");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = ScalarTraits<S>::one();
        return I;
    }

    static Matrix diagonal(const Vector<S>& d) {
        Matrix D(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
        return D;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }

    S& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const S& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const S> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<const S> values() const { return data_; }

    Matrix& operator+=(const Matrix& rhs) {
        check_same(rhs);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& rhs) {
        check_same(rhs);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
        return *this;
    }
    Matrix& operator*=(const S& factor) {
        for (auto& v : data_) v *= factor;
        return *this;
    }
    friend Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
    friend Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
    friend Matrix operator*(const S& factor, Matrix M) { return M *= factor; }

    friend bool operator==(const Matrix& lhs, const Matrix& rhs) {
        return lhs.rows_ == rhs.rows_ && lhs.cols_ == rhs.cols_ && lhs.data_ == rhs.data_;
    }

private:
    void check_same(const Matrix& rhs) const {
        if (rhs.rows_ != rows_ || rhs.cols_ != cols_) {
            throw DimensionError("matrix shape mismatch: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                 " vs " + std::to_string(rhs.rows_) + "x" + std::to_string(rhs.cols_));
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<S> data_;
};

/// A·x. Tallies rows×cols multiplies into `counter` when one is supplied.
template <Scalar S>
Vector<S> mat_vec(const Matrix<S>& A, const Vector<S>& x, OpCounter* counter = nullptr) {
    if (A.cols() != x.size()) {
        throw DimensionError("mat_vec: matrix has " + std::to_string(A.cols()) + " columns, vector has " +
                             std::to_string(x.size()) + " entries");
    }
    Vector<S> out(A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        auto row = A.row(r);
        S acc = ScalarTraits<S>::zero();
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
        out[r] = std::move(acc);
    }
    count(counter, static_cast<std::uint64_t>(A.rows()) * A.cols());
    return out;
}

template <Scalar S>
Matrix<S> mat_mul(const Matrix<S>& A, const Matrix<S>& B) {
    if (A.cols() != B.rows()) {
        throw DimensionError("mat_mul: inner dimensions " + std::to_string(A.cols()) + " and " +
                             std::to_string(B.rows()) + " differ");
    }
    Matrix<S> C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const S& a = A(i, k);
            if (ScalarTraits<S>::is_zero(a)) continue;
            for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
        }
    }
    return C;
}

template <Scalar S>
Matrix<S> transpose(const Matrix<S>& A) {
    Matrix<S> T(A.cols(), A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t c = 0; c < A.cols(); ++c) T(c, r) = A(r, c);
    return T;
}

template <Scalar S>
Matrix<S> submatrix(const Matrix<S>& M, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t cols) {
    Matrix<S> out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = M(row0 + r, col0 + c);
    return out;
}

template <Scalar S>
double norm2(const Vector<S>& v) {
    if constexpr (std::is_same_v<S, double>) {
        double acc = 0.0;
        for (double x : v) acc += x * x;
        return std::sqrt(acc);
    } else {
        S acc = ScalarTraits<S>::zero();
        for (const S& x : v) acc += x * x;
        return std::sqrt(ScalarTraits<S>::to_double(acc));
    }
}

template <Scalar S>
Vector<S> pad_vector(const Vector<S>& v, std::size_t len) {
    if (len < v.size()) throw DimensionError("pad_vector: target shorter than input");
    Vector<S> out(len);
    std::copy(v.begin(), v.end(), out.span().begin());
    return out;
}

template <Scalar S>
Vector<S> truncate(const Vector<S>& v, std::size_t len) {
    if (len > v.size()) throw DimensionError("truncate: target longer than input");
    return Vector<S>(std::vector<S>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len)));
}

template <Scalar S>
Matrix<S> pad_matrix(const Matrix<S>& M, std::size_t rows, std::size_t cols) {
    if (rows < M.rows() || cols < M.cols()) throw DimensionError("pad_matrix: target smaller than input");
    Matrix<S> out(rows, cols);
    for (std::size_t r = 0; r < M.rows(); ++r)
        for (std::size_t c = 0; c < M.cols(); ++c) out(r, c) = M(r, c);
    return out;
}

template <Scalar S>
Vector<S> to_backend(const Vector<double>& v) {
    std::vector<S> out;
    out.reserve(v.size());
    for (double x : v) out.push_back(ScalarTraits<S>::from_double(x));
    return Vector<S>(std::move(out));
}

template <Scalar S>
Matrix<double> to_float(const Matrix<S>& M) {
    std::vector<double> out;
    out.reserve(M.rows() * M.cols());
    for (const S& x : M.values()) out.push_back(ScalarTraits<S>::to_double(x));
    return Matrix<double>(M.rows(), M.cols(), std::move(out));
}

template <Scalar S>
Vector<double> to_float(const Vector<S>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const S& x : v) out.push_back(ScalarTraits<S>::to_double(x));
    return Vector<double>(std::move(out));
}

// ---------------------------------------------------------------------------
// Block splitting

enum class Axis { Horizontal, Vertical };

/// m equal blocks of a matrix. Horizontal blocks are row bands (stacked
/// vertically to rebuild the source), vertical blocks are column bands.
template <Scalar S>
struct BlockSplit {
    Axis axis = Axis::Horizontal;
    std::vector<Matrix<S>> blocks;

    std::size_t m() const { return blocks.size(); }
};

template <Scalar S>
BlockSplit<S> split_horizontal(const Matrix<S>& M, std::size_t m) {
    if (m == 0) throw std::invalid_argument("split factor must be at least 1");
    if (M.rows() % m != 0) {
        throw DimensionError("split_horizontal: " + std::to_string(m) + " does not divide " +
                             std::to_string(M.rows()) + " rows (zero-pad first)");
    }
    const std::size_t band = M.rows() / m;
    BlockSplit<S> split{Axis::Horizontal, {}};
    split.blocks.reserve(m);
    for (std::size_t j = 0; j < m; ++j) split.blocks.push_back(submatrix(M, j * band, band, 0, M.cols()));
    return split;
}

template <Scalar S>
BlockSplit<S> split_vertical(const Matrix<S>& M, std::size_t m) {
    if (m == 0) throw std::invalid_argument("split factor must be at least 1");
    if (M.cols() % m != 0) {
        throw DimensionError("split_vertical: " + std::to_string(m) + " does not divide " +
                             std::to_string(M.cols()) + " columns (zero-pad first)");
    }
    const std::size_t band = M.cols() / m;
    BlockSplit<S> split{Axis::Vertical, {}};
    split.blocks.reserve(m);
    for (std::size_t j = 0; j < m; ++j) split.blocks.push_back(submatrix(M, 0, M.rows(), j * band, band));
    return split;
}

/// Inverse of split_horizontal / split_vertical.
template <Scalar S>
Matrix<S> unsplit(const BlockSplit<S>& split) {
    if (split.blocks.empty()) return {};
    const auto& first = split.blocks.front();
    const std::size_t m = split.m();
    if (split.axis == Axis::Horizontal) {
        Matrix<S> out(first.rows() * m, first.cols());
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t r = 0; r < first.rows(); ++r)
                for (std::size_t c = 0; c < first.cols(); ++c) out(j * first.rows() + r, c) = split.blocks[j](r, c);
        return out;
    }
    Matrix<S> out(first.rows(), first.cols() * m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t r = 0; r < first.rows(); ++r)
            for (std::size_t c = 0; c < first.cols(); ++c) out(r, j * first.cols() + c) = split.blocks[j](r, c);
    return out;
}

inline std::size_t round_up(std::size_t n, std::size_t multiple) {
    if (multiple == 0) throw std::invalid_argument("round_up: zero multiple");
    return ((n + multiple - 1) / multiple) * multiple;
}

template <Scalar S>
struct PaddedPieces {
    Matrix<S> A;
    Matrix<S> Q;
    Vector<S> x0;
    Vector<S> y;
    std::size_t original_n = 0;
};

/// Extends A, Q, x0, y with zeros to the next multiple of m. The padded
/// coordinates stay zero under the recursion, so the leading original_n
/// entries of every iterate are unchanged.
template <Scalar S>
PaddedPieces<S> zero_pad(const Matrix<S>& A, const Matrix<S>& Q, const Vector<S>& x0, const Vector<S>& y,
                         std::size_t m) {
    const std::size_t n = A.rows();
    if (!A.is_square() || !Q.is_square() || Q.rows() != n || x0.size() != n || y.size() != n) {
        throw DimensionError("zero_pad: A, Q must be square of equal size matching x0 and y");
    }
    const std::size_t padded = round_up(n, m);
    return {pad_matrix(A, padded, padded), pad_matrix(Q, padded, padded), pad_vector(x0, padded),
            pad_vector(y, padded), n};
}

/// Solves M x = b by Gaussian elimination with partial pivoting (largest
/// magnitude for floats, first nonzero for exact scalars).
template <Scalar S>
Vector<S> solve(Matrix<S> M, Vector<S> b) {
    const std::size_t n = M.rows();
    if (!M.is_square() || b.size() != n) throw DimensionError("solve: need square M and matching b");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = n;
        if constexpr (std::is_same_v<S, double>) {
            double best = 0.0;
            for (std::size_t r = col; r < n; ++r) {
                if (std::fabs(M(r, col)) > best) {
                    best = std::fabs(M(r, col));
                    pivot = r;
                }
            }
            if (pivot != n && best <= 1e-300) pivot = n;
        } else {
            for (std::size_t r = col; r < n; ++r) {
                if (!ScalarTraits<S>::is_zero(M(r, col))) {
                    pivot = r;
                    break;
                }
            }
        }
        if (pivot == n) throw std::domain_error("solve: matrix is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(M(pivot, c), M(col, c));
            std::swap(b[pivot], b[col]);
        }
        const S inv = ScalarTraits<S>::one() / M(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            if (ScalarTraits<S>::is_zero(M(r, col))) continue;
            const S factor = M(r, col) * inv;
            for (std::size_t c = col; c < n; ++c) M(r, c) -= factor * M(col, c);
            b[r] -= factor * b[col];
        }
    }
    Vector<S> x(n);
    for (std::size_t i = n; i-- > 0;) {
        S acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= M(i, c) * x[c];
        x[i] = acc / M(i, i);
    }
    return x;
}

/// Power-iteration estimate of the spectral radius from a seeded random
/// start. Converges when the dominant eigenvalue magnitude is unique or the
/// matrix is symmetric; otherwise the value is only indicative.
double spectral_radius_estimate(const Matrix<double>& A, std::size_t iters, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Text format: "rows cols" then row-major entries ("p/q" or decimals).

template <Scalar S>
Matrix<S> read_matrix(std::istream& in) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(in >> rows >> cols)) throw std::runtime_error("matrix file: missing 'rows cols' header");
    std::vector<S> data;
    data.reserve(rows * cols);
    std::string token;
    for (std::size_t i = 0; i < rows * cols; ++i) {
        if (!(in >> token)) {
            throw std::runtime_error("matrix file: expected " + std::to_string(rows * cols) + " entries, got " +
                                     std::to_string(i));
        }
        data.push_back(ScalarTraits<S>::parse(token));
    }
    return Matrix<S>(rows, cols, std::move(data));
}

template <Scalar S>
void write_matrix(std::ostream& out, const Matrix<S>& M) {
    out << M.rows() << ' ' << M.cols() << '\n';
    for (std::size_t r = 0; r < M.rows(); ++r) {
        for (std::size_t c = 0; c < M.cols(); ++c) {
            if (c > 0) out << ' ';
            out << ScalarTraits<S>::format(M(r, c));
        }
        out << '\n';
    }
}

/// Vectors use the matrix format with a single column (a single row is
/// also accepted on input).
template <Scalar S>
Vector<S> read_vector(std::istream& in) {
    Matrix<S> M = read_matrix<S>(in);
    if (M.cols() != 1 && M.rows() != 1) throw DimensionError("vector file must have one row or one column");
    return Vector<S>(std::vector<S>(M.values().begin(), M.values().end()));
}

template <Scalar S>
void write_vector(std::ostream& out, const Vector<S>& v) {
    write_matrix(out, Matrix<S>(v.size(), 1, v.values()));
}

}  // namespace polylin
