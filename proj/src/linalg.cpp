#include "polylin/linalg.hpp"

#include <random>

namespace polylin {

double spectral_radius_estimate(const Matrix<double>& A, std::size_t iters, std::uint64_t seed) {
    if (!A.is_square()) throw DimensionError("spectral_radius_estimate: matrix must be square");
    const std::size_t n = A.rows();
    if (n == 0) return 0.0;

    std::mt19937_64 rng(seed);
    Vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        // uniform in [-1, 1) from the top 53 bits
        x[i] = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    }
    double norm = norm2(x);
    if (norm == 0.0) {
        x[0] = 1.0;
        norm = 1.0;
    }
    x *= 1.0 / norm;

    double estimate = 0.0;
    for (std::size_t k = 0; k < std::max<std::size_t>(iters, 1); ++k) {
        Vector<double> next = mat_vec(A, x);
        const double len = norm2(next);
        if (len == 0.0) return 0.0;
        estimate = len;
        next *= 1.0 / len;
        x = std::move(next);
    }
    return estimate;
}

}  // namespace polylin
