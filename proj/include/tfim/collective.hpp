#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tfim/model.hpp"
#include "tfim/spectral.hpp"

namespace tfim {

// The infinite-range Hamiltonian used throughout is
//   H = -(J/N) (J_z^2 - N/4) - Gamma J^x,
// i.e. a pair coupling 2J/N, which places the mean-field critical point at
// g = Gamma/J = 1 (classical angle sin(theta) = g). Since [H, J^2] = 0 the
// model block-diagonalizes over total-spin sectors |S;M>, each a tridiagonal
// matrix in M, with multiplicity D(N,S) from angular-momentum counting.

inline double log_binomial(int n, int k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// log D(N, S) with S = N/2 - k: D = C(N,k) - C(N,k-1).
inline double sector_log_degeneracy(int n, int k) {
    if (k < 0 || 2 * k > n) throw std::invalid_argument("sector index out of range");
    const double a = log_binomial(n, k);
    if (k == 0) return a;
    const double b = log_binomial(n, k - 1);
    return a + std::log1p(-std::exp(b - a));
}

/// D(N, S) as a double (exact for moderate N).
inline double sector_degeneracy(int n, int k) { return std::round(std::exp(sector_log_degeneracy(n, k))); }

/// Tridiagonal sector Hamiltonian in the |S;M> basis, M = -S + m.
/// diag[m] = -(J/N)(M^2 - N/4); off[m] couples M and M+1 through -Gamma J^x.
inline void sector_tridiagonal(int n, int k, double g, double coupling_j,
                               Eigen::VectorXd& diag, Eigen::VectorXd& off) {
    const double s = 0.5 * n - k;
    const int dim = n - 2 * k + 1;
    diag.resize(dim);
    off.resize(std::max(dim - 1, 1));
    const double gamma = g * coupling_j;
    for (int m = 0; m < dim; ++m) {
        const double mz = -s + m;
        diag[m] = -coupling_j / n * (mz * mz - 0.25 * n);
        if (m + 1 < dim)
            off[m] = -0.5 * gamma * std::sqrt(s * (s + 1) - mz * (mz + 1));
    }
}

namespace detail {

/// Eigen-solve a symmetric tridiagonal matrix; diag is replaced by the
/// ascending eigenvalues; off is destroyed.
inline void tridiag_eigen(Eigen::VectorXd& diag, Eigen::VectorXd& off, Eigen::MatrixXd* vecs) {
    const lapack_int n = static_cast<lapack_int>(diag.size());
    lapack_int info;
    if (vecs) {
        vecs->resize(n, n);
        info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, diag.data(), off.data(),
                              vecs->data(), n);
    } else {
        double dummy = 0.0;
        info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'N', n, diag.data(), off.data(), &dummy, 1);
    }
    if (info != 0) throw std::runtime_error("dstevd failed");
}

}  // namespace detail

/// Exact thermal observables of the infinite-range model from the sector sum.
/// Cost is dominated by the largest sectors; sectors with total Boltzmann
/// weight below 1e-12 of the partition function are skipped.
inline ObservableReport collective_observables(const ModelSpec& spec) {
    spec.validate();
    if (spec.dimension != kInfiniteDim)
        throw std::invalid_argument("collective backend requires the infinite-range model");
    const int n = spec.n_sites();
    if (n < 2 || n > 4000) throw std::invalid_argument("collective backend: 2 <= N <= 4000");
    const double jj = spec.coupling_j;
    const double beta = spec.temperature == 0 ? 1e6 / jj : 1.0 / (spec.temperature * jj);
    const int n_sectors = n / 2 + 1;

    // pass 1: eigenvalues of every sector, global ground energy, and the
    // log-domain sector masses log[D_k sum_m e^{-beta E_m}] - log Z
    std::vector<Eigen::VectorXd> evals(n_sectors);
    std::vector<double> log_mass(n_sectors);
    double e0 = std::numeric_limits<double>::infinity(), e1 = e0;
    for (int k = 0; k < n_sectors; ++k) {
        Eigen::VectorXd diag, off;
        sector_tridiagonal(n, k, spec.field_ratio, jj, diag, off);
        detail::tridiag_eigen(diag, off, nullptr);
        evals[k] = diag;
        for (int m = 0; m < diag.size() && m < 2; ++m) {
            const double e = diag[m];
            if (e < e0) { e1 = e0; e0 = e; }
            else if (e < e1) { e1 = e; }
        }
    }
    double log_z_max = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_sectors; ++k) {
        double zk = 0.0;
        for (int m = 0; m < evals[k].size(); ++m)
            zk += std::exp(-beta * (evals[k][m] - evals[k][0]));
        log_mass[k] = sector_log_degeneracy(n, k) - beta * (evals[k][0] - e0) + std::log(zk);
        log_z_max = std::max(log_z_max, log_mass[k]);
    }
    double z = 0.0;
    for (int k = 0; k < n_sectors; ++k) z += std::exp(log_mass[k] - log_z_max);
    const double log_z = log_z_max + std::log(z);

    ObservableReport rep;
    if (spec.temperature == 0 && e1 - e0 < 1e-10 * jj) rep.degenerate_ground_warning = true;

    // pass 2: sectors with non-negligible mass, now with eigenvectors. All
    // pair kernels (QFI, QV) are homogeneous of degree one in the weights, so
    // each sector is evaluated with weights normalized within the sector and
    // rescaled by its total probability mass.
    double jx = 0.0, jz_mean = 0.0, jz_sq = 0.0, jy_sq = 0.0, qfi = 0.0, qv = 0.0;
    for (int k = 0; k < n_sectors; ++k) {
        const int dim = n - 2 * k + 1;
        const double mass = std::exp(log_mass[k] - log_z);
        if (mass < 1e-12) continue;
        const double s = 0.5 * n - k;

        Eigen::VectorXd diag, off;
        sector_tridiagonal(n, k, spec.field_ratio, jj, diag, off);
        Eigen::MatrixXd v;
        detail::tridiag_eigen(diag, off, &v);

        SpectralDecomposition dec;
        dec.energies = diag;
        dec.beta = beta;
        dec.weights.resize(dim);
        double qnorm = 0.0;
        for (int m = 0; m < dim; ++m) {
            dec.weights[m] = std::exp(-beta * (diag[m] - diag[0]));
            qnorm += dec.weights[m];
        }
        dec.weights /= qnorm;

        Eigen::VectorXd mz(dim), bx(std::max(dim - 1, 1));
        for (int m = 0; m < dim; ++m) mz[m] = -s + m;
        for (int m = 0; m + 1 < dim; ++m)
            bx[m] = 0.5 * std::sqrt(s * (s + 1) - mz[m] * (mz[m] + 1));

        for (int c = 0; c < dim; ++c) {
            const double w = mass * dec.weights[c];
            if (w < 1e-16 * mass) continue;
            const Eigen::VectorXd vc = v.col(c);
            double ex = 0.0;
            Eigen::VectorXd jxv = Eigen::VectorXd::Zero(dim);
            for (int m = 0; m + 1 < dim; ++m) {
                ex += 2.0 * bx[m] * vc[m] * vc[m + 1];
                jxv[m] += bx[m] * vc[m + 1];
                jxv[m + 1] += bx[m] * vc[m];
            }
            const double ez = mz.dot(vc.cwiseProduct(vc).matrix());
            const double ez2 = (mz.cwiseProduct(vc)).squaredNorm();
            jx += w * ex;
            jz_mean += w * ez;
            jz_sq += w * ez2;
            jy_sq += w * (s * (s + 1) - jxv.squaredNorm() - ez2);
        }

        // J^z in the sector eigenbasis for QFI / QV pair sums
        const Eigen::MatrixXd o = v.transpose() * mz.asDiagonal() * v;
        qfi += mass * qfi_spectral_eigenbasis(dec, o);
        qv += mass * qv_spectral_eigenbasis(dec, o, 1e-10 * jj);
    }

    rep.jx_mean = {jx, 0.0};
    rep.var_jy = {jy_sq, 0.0};
    rep.var_jz = {jz_sq - jz_mean * jz_mean, 0.0};
    rep.qv_jz = {qv, 0.0};
    rep.qfi_jz = Quantity{qfi, 0.0};
    rep.xi_r_sq = {n * jy_sq / (jx * jx), 0.0};
    if (qfi > 0) rep.chi_sq = Quantity{n / qfi, 0.0};
    return rep;
}

/// Leading-order Holstein-Primakoff description of the infinite-range ground
/// state about the classical orientation (z: cos theta, x: sin theta).
struct HpPrediction {
    double g = 0.0;
    double theta = 0.0;      // classical tilt from the z axis
    double f = 1.0;          // oscillator prefactor, H = E0 + J f (p^2 + w^2 x^2)/2
    double omega_sq = 0.0;   // squared oscillator frequency
    double e0 = 0.0;         // classical ground energy
    double gap = 0.0;        // J f omega
    double jx = 0.0;         // S sin(theta)
    double var_jy = 0.0;     // S/2 at the displayed leading order
    double var_jz = 0.0;     // sin^2(theta) S/2
};

inline HpPrediction hp_predictions(int n, double g, double coupling_j = 1.0) {
    if (std::abs(g - 1.0) < 1e-3)
        throw std::invalid_argument("hp_predictions: harmonic expansion breaks down at g = 1");
    if (g < 0 || n < 1) throw std::invalid_argument("hp_predictions: invalid arguments");
    const double s = 0.5 * n;
    HpPrediction hp;
    hp.g = g;
    hp.theta = g <= 1 ? std::asin(g) : 0.5 * M_PI;
    hp.f = g <= 1 ? 1.0 : g;
    hp.omega_sq = g <= 1 ? 1.0 - g * g : 1.0 - 1.0 / g;
    hp.gap = coupling_j * hp.f * std::sqrt(hp.omega_sq);
    const double sin_t = std::sin(hp.theta);
    hp.e0 = -coupling_j * s * (0.5 * (1.0 - sin_t * sin_t) + g * sin_t);
    hp.jx = s * sin_t;
    hp.var_jy = 0.5 * s;
    hp.var_jz = sin_t * sin_t * 0.5 * s;
    return hp;
}

/// First-order strong-field squeezing parameter, 1 - z/(4g) for coordination
/// number z (z = 2d on hypercubic lattices).
inline double perturbative_xi(double g, double z) {
    if (g <= 0) throw std::invalid_argument("perturbative_xi: g must be positive");
    return 1.0 - z / (4.0 * g);
}

}  // namespace tfim
