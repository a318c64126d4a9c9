#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace tfim {

namespace detail {

template <class Scalar>
double magnitude(const Scalar& x) {
    return std::abs(x);
}

}  // namespace detail

/// Pfaffian of an even-dimensional antisymmetric matrix via Parlett-Reid
/// skew-symmetric tridiagonalization with partial pivoting. The input is
/// checked for antisymmetry (relative tolerance 1e-12).
template <class Scalar>
Scalar pfaffian(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a) {
    const Eigen::Index n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("pfaffian: matrix not square");
    if (n % 2 != 0) throw std::invalid_argument("pfaffian: odd dimension");
    if (n == 0) return Scalar(1);
    const double scale = a.cwiseAbs().maxCoeff();
    if ((a + a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw std::invalid_argument("pfaffian: matrix not antisymmetric");

    Scalar result(1);
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        // bring the largest element of column k below the diagonal to row k+1
        Eigen::Index pivot = k + 1;
        for (Eigen::Index i = k + 2; i < n; ++i)
            if (detail::magnitude(a(i, k)) > detail::magnitude(a(pivot, k))) pivot = i;
        if (pivot != k + 1) {
            a.row(k + 1).swap(a.row(pivot));
            a.col(k + 1).swap(a.col(pivot));
            result = -result;
        }
        const Scalar p = a(k + 1, k);
        if (p == Scalar(0)) return Scalar(0);
        result *= -p;  // Pf contribution of the (k, k+1) block is a(k, k+1) = -p
        if (k + 2 < n) {
            // eliminate column k below row k+1 by a congruence transformation
            const auto tau = (a.col(k).segment(k + 2, n - k - 2) / p).eval();
            auto rest = a.bottomRightCorner(n - k - 2, n - k - 2);
            const auto row = a.row(k + 1).segment(k + 2, n - k - 2).eval();
            rest.noalias() -= tau * row;
            rest.noalias() += row.transpose() * tau.transpose();
        }
    }
    return result;
}

/// Pfaffians of all leading principal submatrices of even size, computed by a
/// single unpivoted Parlett-Reid sweep: out[k] = Pf(A[0:2k+2, 0:2k+2]).
/// When a pivot becomes negligible relative to the matrix scale the remaining
/// prefixes are recomputed individually with the pivoted routine.
template <class Scalar>
std::vector<Scalar> pfaffian_prefixes(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a_in) {
    const Eigen::Index n = a_in.rows();
    if (n % 2 != 0) throw std::invalid_argument("pfaffian_prefixes: odd dimension");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a = a_in;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);

    std::vector<Scalar> out(n / 2, Scalar(0));
    Scalar running(1);
    for (Eigen::Index k = 0; k + 1 < n; k += 2) {
        const Scalar p = a(k + 1, k);
        if (detail::magnitude(p) < 1e-13 * scale) {
            // breakdown: fall back to pivoted evaluations of what remains
            for (Eigen::Index m = k; m + 1 < n; m += 2)
                out[m / 2] = pfaffian<Scalar>(a_in.topLeftCorner(m + 2, m + 2));
            return out;
        }
        running *= -p;
        out[k / 2] = running;
        if (k + 2 < n) {
            const auto tau = (a.col(k).segment(k + 2, n - k - 2) / p).eval();
            auto rest = a.bottomRightCorner(n - k - 2, n - k - 2);
            const auto row = a.row(k + 1).segment(k + 2, n - k - 2).eval();
            rest.noalias() -= tau * row;
            rest.noalias() += row.transpose() * tau.transpose();
        }
    }
    return out;
}

}  // namespace tfim
