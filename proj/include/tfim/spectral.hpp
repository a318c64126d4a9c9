#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tfim {

/// Full eigendecomposition of a Hamiltonian together with Boltzmann weights.
struct SpectralDecomposition {
    Eigen::VectorXd energies;    // sorted non-decreasing
    Eigen::MatrixXd vectors;     // eigenvectors as columns
    Eigen::VectorXd weights;     // p_n, sum to 1
    double beta = 0.0;           // inverse temperature the weights refer to
};

/// Normalized Boltzmann weights computed in the log domain.
inline Eigen::VectorXd boltzmann_weights(const Eigen::VectorXd& energies, double beta) {
    const double e0 = energies.minCoeff();
    if (std::isinf(beta)) {
        // Ground-state projector; -inf * 0 would be NaN in the generic path.
        Eigen::VectorXd w = (energies.array() - e0 < 1e-12).cast<double>();
        return w / w.sum();
    }
    Eigen::VectorXd w = (-beta * (energies.array() - e0)).exp();
    const double z = w.sum();
    if (!(z > 0) || !std::isfinite(z)) throw std::runtime_error("partition function underflow");
    return w / z;
}

namespace detail {
// Divide-and-conquer symmetric eigensolver (LAPACK dsyevd), in place.
inline void symmetric_eigen(Eigen::MatrixXd& a, Eigen::VectorXd& w) {
    const lapack_int n = static_cast<lapack_int>(a.rows());
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    if (info != 0) throw std::runtime_error("dsyevd failed");
}
}  // namespace detail

inline SpectralDecomposition decompose(const Eigen::MatrixXd& hamiltonian, double beta) {
    SpectralDecomposition dec;
    dec.vectors = hamiltonian;
    dec.energies.resize(hamiltonian.rows());
    detail::symmetric_eigen(dec.vectors, dec.energies);
    dec.weights = boltzmann_weights(dec.energies, beta);
    dec.beta = beta;
    return dec;
}

namespace detail {

/// Sum of f(p_n, p_m, E_n, E_m) |O_nm|^2 over all ordered eigenstate pairs,
/// restricting the explicit loop to rows with non-negligible weight. The
/// kernel f must be symmetric under n <-> m.
template <class Kernel>
double pair_sum(const SpectralDecomposition& dec, const Eigen::MatrixXd& o_eigen,
                Kernel&& kernel, double weight_floor = 1e-18) {
    const int dim = static_cast<int>(dec.energies.size());
    std::vector<int> heavy;
    for (int n = 0; n < dim; ++n)
        if (dec.weights[n] > weight_floor) heavy.push_back(n);
    std::vector<bool> is_heavy(dim, false);
    for (int n : heavy) is_heavy[n] = true;

    double total = 0.0;
    for (int n : heavy) {
        for (int m = 0; m < dim; ++m) {
            const double f = kernel(dec.weights[n], dec.weights[m], dec.energies[n], dec.energies[m]);
            const double contrib = f * o_eigen(n, m) * o_eigen(n, m);
            total += contrib;
            if (!is_heavy[m]) total += contrib;  // mirror pair (m, n) skipped by the loop
        }
    }
    return total;
}

}  // namespace detail

/// Quantum Fisher information of a Hermitian observable given in the energy
/// eigenbasis: 2 sum_{nm} (p_n - p_m)^2 / (p_n + p_m) |O_nm|^2. Pairs with
/// p_n + p_m below 1e-14 are skipped.
inline double qfi_spectral_eigenbasis(const SpectralDecomposition& dec,
                                      const Eigen::MatrixXd& o_eigen) {
    return detail::pair_sum(dec, o_eigen, [](double pn, double pm, double, double) {
        const double s = pn + pm;
        if (s < 1e-14) return 0.0;
        const double d = pn - pm;
        return 2.0 * d * d / s;
    });
}

/// Quantum variance of a Hermitian observable given in the energy eigenbasis:
/// <O^2> minus the imaginary-time average of <O(tau) O(0)>. Degenerate pairs
/// (|E_n - E_m| < degeneracy_tol) contribute p_n |O_nm|^2 to the average.
inline double qv_spectral_eigenbasis(const SpectralDecomposition& dec,
                                     const Eigen::MatrixXd& o_eigen,
                                     double degeneracy_tol = 1e-10) {
    const double beta = dec.beta;
    const double mean_sq = detail::pair_sum(
        dec, o_eigen, [](double pn, double pm, double, double) { return 0.5 * (pn + pm); });
    const double tau_avg = detail::pair_sum(
        dec, o_eigen, [beta, degeneracy_tol](double pn, double pm, double en, double em) {
            if (std::abs(en - em) < degeneracy_tol) return 0.5 * (pn + pm);
            return (pn - pm) / (beta * (em - en));
        });
    return mean_sq - tau_avg;
}

/// Convenience wrappers taking the observable in the computational basis.
inline double qfi_spectral(const SpectralDecomposition& dec, const Eigen::MatrixXd& observable) {
    const Eigen::MatrixXd o_eigen = dec.vectors.transpose() * observable * dec.vectors;
    return qfi_spectral_eigenbasis(dec, o_eigen);
}

inline double qv_spectral(const SpectralDecomposition& dec, const Eigen::MatrixXd& observable,
                          double degeneracy_tol = 1e-10) {
    const Eigen::MatrixXd o_eigen = dec.vectors.transpose() * observable * dec.vectors;
    return qv_spectral_eigenbasis(dec, o_eigen, degeneracy_tol);
}

}  // namespace tfim
