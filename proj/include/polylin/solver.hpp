#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "polylin/linalg.hpp"

namespace polylin {

/// The recursion x(k+1) = A x(k) + Q y run for n steps from x0.
template <Scalar S>
struct IterationSystem {
    Matrix<S> A;
    Matrix<S> Q;
    Vector<S> y;
    Vector<S> x0;
    std::size_t n = 2;

    std::size_t dim() const { return A.rows(); }

    /// Throws DimensionError / std::invalid_argument. The coded protocols
    /// need an even step count; the plain recursion does not.
    void validate(bool require_even = true) const;
};

/// Power-iteration check that the recursion converges. Returns a warning
/// message when the estimated spectral radius of A is not below one.
template <Scalar S>
std::optional<std::string> convergence_warning(const IterationSystem<S>& sys, std::uint64_t seed = 7);

template <Scalar S>
struct CastResult {
    Matrix<S> A;
    Matrix<S> Q;
};

/// Jacobi splitting of M = D + L: A = -D^-1 L, Q = D^-1.
template <Scalar S>
CastResult<S> jacobi_cast(const Matrix<S>& M);

/// Gradient descent on ||Mx - y||^2 with step delta and shrinkage lambda:
/// A = (1 - lambda) I - delta M^T M, Q = delta M^T. M is L x N with L <= N;
/// Q is zero-padded to N x N, so y must be zero-extended to length N.
template <Scalar S>
CastResult<S> gd_cast(const Matrix<S>& M, const S& delta, const S& lambda = ScalarTraits<S>::zero());

/// x(steps) by direct application of the recursion.
template <Scalar S>
Vector<S> iterate_steps(const Matrix<S>& A, const Matrix<S>& Q, const Vector<S>& x0, const Vector<S>& y,
                        std::size_t steps);

/// Correctness oracle for every distributed protocol.
template <Scalar S>
Vector<S> iterate(const IterationSystem<S>& sys);

/// A^n x0 + (A^(n-1) + ... + I) Q y using explicit matrix powers.
template <Scalar S>
Vector<S> closed_form(const IterationSystem<S>& sys);

/// Fixed point x* of the recursion, from (I - A) x* = Q y. Throws
/// std::domain_error when I - A is singular.
template <Scalar S>
Vector<S> fixed_point(const IterationSystem<S>& sys);

/// ||x_n - x*||_2.
template <Scalar S>
double error_norm(const IterationSystem<S>& sys, const Vector<S>& x_n);

struct ErrorBoundInputs {
    double sigma1 = 0.5;     ///< largest eigenvalue magnitude of A
    std::size_t N = 1;       ///< dimension
    double max_alpha = 1.0;  ///< max |alpha_i| over eigen-coordinates of e(0)
    double epsilon = 1e-3;   ///< target error
};

struct IterationBound {
    double bound = 0.0;      ///< log(N max_alpha / epsilon) / log(1 / sigma1)
    std::size_t n_even = 2;  ///< smallest even integer >= max(bound, 2)
};

IterationBound required_iterations(const ErrorBoundInputs& in);

}  // namespace polylin
