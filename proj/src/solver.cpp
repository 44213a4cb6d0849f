#include "polylin/solver.hpp"

#include <cmath>
#include <sstream>

namespace polylin {

template <Scalar S>
void IterationSystem<S>::validate(bool require_even) const {
    const std::size_t N = A.rows();
    if (!A.is_square()) throw DimensionError("iteration system: A must be square");
    if (Q.rows() != N || Q.cols() != N) throw DimensionError("iteration system: Q must be N x N");
    if (y.size() != N) throw DimensionError("iteration system: y must have length N");
    if (x0.size() != N) throw DimensionError("iteration system: x0 must have length N");
    if (require_even && (n < 2 || n % 2 != 0)) {
        throw std::invalid_argument("iteration count n must be even and at least 2 (got " + std::to_string(n) + ")");
    }
    if (!require_even && n < 1) throw std::invalid_argument("iteration count n must be at least 1");
}

template <Scalar S>
std::optional<std::string> convergence_warning(const IterationSystem<S>& sys, std::uint64_t seed) {
    const double rho = spectral_radius_estimate(to_float(sys.A), 500, seed);
    if (rho < 1.0) return std::nullopt;
    std::ostringstream msg;
    msg << "estimated spectral radius of A is " << rho << " (>= 1); the iteration may not converge";
    return msg.str();
}

template <Scalar S>
CastResult<S> jacobi_cast(const Matrix<S>& M) {
    if (!M.is_square()) throw DimensionError("jacobi_cast: M must be square");
    const std::size_t N = M.rows();
    CastResult<S> out{Matrix<S>(N, N), Matrix<S>(N, N)};
    for (std::size_t i = 0; i < N; ++i) {
        if (ScalarTraits<S>::is_zero(M(i, i))) {
            throw std::domain_error("jacobi_cast: zero diagonal entry at row " + std::to_string(i));
        }
        const S inv = ScalarTraits<S>::one() / M(i, i);
        out.Q(i, i) = inv;
        for (std::size_t j = 0; j < N; ++j) {
            if (j != i) out.A(i, j) = -(M(i, j) * inv);
        }
    }
    return out;
}

template <Scalar S>
CastResult<S> gd_cast(const Matrix<S>& M, const S& delta, const S& lambda) {
    const std::size_t L = M.rows();
    const std::size_t N = M.cols();
    if (L > N) throw DimensionError("gd_cast: more rows than columns is not supported");
    if (!(delta > ScalarTraits<S>::zero())) throw std::invalid_argument("gd_cast: delta must be positive");
    if (lambda < ScalarTraits<S>::zero() || !(lambda < ScalarTraits<S>::one())) {
        throw std::invalid_argument("gd_cast: lambda must lie in [0, 1)");
    }
    const Matrix<S> Mt = transpose(M);
    Matrix<S> A = (ScalarTraits<S>::one() - lambda) * Matrix<S>::identity(N);
    A -= delta * mat_mul(Mt, M);
    Matrix<S> Q = pad_matrix(delta * Mt, N, N);
    return {std::move(A), std::move(Q)};
}

template <Scalar S>
Vector<S> iterate_steps(const Matrix<S>& A, const Matrix<S>& Q, const Vector<S>& x0, const Vector<S>& y,
                        std::size_t steps) {
    const Vector<S> qy = mat_vec(Q, y);
    Vector<S> x = x0;
    for (std::size_t k = 0; k < steps; ++k) x = mat_vec(A, x) + qy;
    return x;
}

template <Scalar S>
Vector<S> iterate(const IterationSystem<S>& sys) {
    sys.validate(false);
    return iterate_steps(sys.A, sys.Q, sys.x0, sys.y, sys.n);
}

template <Scalar S>
Vector<S> closed_form(const IterationSystem<S>& sys) {
    sys.validate(false);
    const std::size_t N = sys.dim();
    // power = A^k and geometric = I + ... + A^(k-1) after k passes
    Matrix<S> power = Matrix<S>::identity(N);
    Matrix<S> geometric(N, N);
    for (std::size_t k = 0; k < sys.n; ++k) {
        geometric += power;
        power = mat_mul(sys.A, power);
    }
    return mat_vec(power, sys.x0) + mat_vec(mat_mul(geometric, sys.Q), sys.y);
}

template <Scalar S>
Vector<S> fixed_point(const IterationSystem<S>& sys) {
    const std::size_t N = sys.dim();
    return solve(Matrix<S>::identity(N) - sys.A, mat_vec(sys.Q, sys.y));
}

template <Scalar S>
double error_norm(const IterationSystem<S>& sys, const Vector<S>& x_n) {
    return norm2(x_n - fixed_point(sys));
}

IterationBound required_iterations(const ErrorBoundInputs& in) {
    if (!(in.sigma1 < 1.0)) throw std::domain_error("required_iterations: sigma1 must be below 1");
    if (!(in.sigma1 > 0.0)) throw std::invalid_argument("required_iterations: sigma1 must be positive");
    if (!(in.epsilon > 0.0)) throw std::invalid_argument("required_iterations: epsilon must be positive");
    if (in.max_alpha < 0.0) throw std::invalid_argument("required_iterations: max_alpha must be non-negative");

    IterationBound out;
    out.bound = std::log(static_cast<double>(in.N) * in.max_alpha / in.epsilon) / std::log(1.0 / in.sigma1);
    const double target = std::max(out.bound, 2.0);
    auto n = static_cast<std::size_t>(std::ceil(target));
    if (n % 2 != 0) ++n;
    out.n_even = n;
    return out;
}

#define POLYLIN_INSTANTIATE(S)                                                                              \
    template struct IterationSystem<S>;                                                                      \
    template std::optional<std::string> convergence_warning(const IterationSystem<S>&, std::uint64_t);      \
    template CastResult<S> jacobi_cast(const Matrix<S>&);                                                    \
    template CastResult<S> gd_cast(const Matrix<S>&, const S&, const S&);                                    \
    template Vector<S> iterate_steps(const Matrix<S>&, const Matrix<S>&, const Vector<S>&, const Vector<S>&, \
                                     std::size_t);                                                           \
    template Vector<S> iterate(const IterationSystem<S>&);                                                   \
    template Vector<S> closed_form(const IterationSystem<S>&);                                               \
    template Vector<S> fixed_point(const IterationSystem<S>&);                                               \
    template double error_norm(const IterationSystem<S>&, const Vector<S>&);

POLYLIN_INSTANTIATE(double)
POLYLIN_INSTANTIATE(Rational)

#undef POLYLIN_INSTANTIATE

}  // namespace polylin
