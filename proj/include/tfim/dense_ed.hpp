#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tfim/model.hpp"
#include "tfim/spectral.hpp"

namespace tfim {

/// Dense realization of the Hamiltonian in the product S^z basis. Basis state
/// b has spin up at site i when bit i of b is set. Hard limit N <= 16.
inline Eigen::MatrixXd build_dense_hamiltonian(const ModelSpec& spec) {
    spec.validate();
    const int n = spec.n_sites();
    if (n > 16) throw std::invalid_argument("dense oracle limited to N <= 16");
    const auto bonds = lattice_bonds(spec);
    // the pair coupling of the infinite-range model carries a factor 2/N so
    // that the mean-field critical point sits at g = 1 (the pair sum equals
    // (J_z^2 - N/4)/2, so the Hamiltonian reads -(J/N)(J_z^2 - N/4) - Gamma J^x)
    const double j_bond =
        spec.dimension == kInfiniteDim ? 2.0 * spec.coupling_j / n : spec.coupling_j;
    const double gamma = spec.gamma();
    const long dim = 1L << n;

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (long b = 0; b < dim; ++b) {
        double diag = 0.0;
        for (const auto& [i, j] : bonds) {
            const double szi = (b >> i) & 1 ? 0.5 : -0.5;
            const double szj = (b >> j) & 1 ? 0.5 : -0.5;
            diag -= j_bond * szi * szj;
        }
        h(b, b) = diag;
        for (int i = 0; i < n; ++i) h(b ^ (1L << i), b) -= 0.5 * gamma;
    }
    return h;
}

namespace detail {

/// Diagonal of J^z in the product basis.
inline Eigen::VectorXd jz_diagonal(int n) {
    const long dim = 1L << n;
    Eigen::VectorXd d(dim);
    for (long b = 0; b < dim; ++b) {
        int up = 0;
        for (int i = 0; i < n; ++i) up += (b >> i) & 1;
        d[b] = up - 0.5 * n;  // sum of +-1/2 per site
    }
    return d;
}

/// J^x |v> for a real vector.
inline Eigen::VectorXd apply_jx(int n, const Eigen::VectorXd& v) {
    const long dim = 1L << n;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    for (long b = 0; b < dim; ++b)
        for (int i = 0; i < n; ++i) out[b ^ (1L << i)] += 0.5 * v[b];
    return out;
}

/// J^y |v> = i * (returned vector) for a real vector: S^y flips a bit with
/// amplitude +i/2 when lowering the bit and -i/2 when raising it.
inline Eigen::VectorXd apply_jy_imag(int n, const Eigen::VectorXd& v) {
    const long dim = 1L << n;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    for (long b = 0; b < dim; ++b)
        for (int i = 0; i < n; ++i) {
            const bool up = (b >> i) & 1;
            out[b ^ (1L << i)] += (up ? 0.5 : -0.5) * v[b];
        }
    return out;
}

/// S^y_i |v> = i * (returned vector) for a single site of a real vector.
inline Eigen::VectorXd apply_sy_imag(int n, int site, const Eigen::VectorXd& v) {
    const long dim = 1L << n;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    for (long b = 0; b < dim; ++b) {
        const bool up = (b >> site) & 1;
        out[b ^ (1L << site)] += (up ? 0.5 : -0.5) * v[b];
    }
    return out;
}

}  // namespace detail

/// Exact thermal (or ground-state) observables from the dense oracle.
/// All uncertainties are zero.
inline ObservableReport exact_observables(const ModelSpec& spec) {
    const int n = spec.n_sites();
    const double beta = spec.temperature == 0 ? std::numeric_limits<double>::infinity()
                                              : 1.0 / (spec.temperature * spec.coupling_j);

    const Eigen::MatrixXd h = build_dense_hamiltonian(spec);
    SpectralDecomposition dec = decompose(h, beta);
    const long dim = dec.energies.size();

    ObservableReport rep;
    if (spec.temperature == 0 && dim > 1 &&
        dec.energies[1] - dec.energies[0] < 1e-10 * spec.coupling_j)
        rep.degenerate_ground_warning = true;

    const Eigen::VectorXd jz = detail::jz_diagonal(n);

    double jx_mean = 0.0, jy_sq = 0.0, jz_mean = 0.0, jz_sq = 0.0;
    for (long k = 0; k < dim; ++k) {
        const double p = dec.weights[k];
        if (p < 1e-18) continue;
        const Eigen::VectorXd v = dec.vectors.col(k);
        jx_mean += p * v.dot(detail::apply_jx(n, v));
        jy_sq += p * detail::apply_jy_imag(n, v).squaredNorm();
        const Eigen::VectorXd jzv = jz.cwiseProduct(v);
        jz_mean += p * v.dot(jzv);
        jz_sq += p * jzv.squaredNorm();
    }
    rep.jx_mean = {jx_mean, 0.0};
    rep.var_jy = {jy_sq, 0.0};  // <J^y> vanishes for real eigenvectors
    rep.var_jz = {jz_sq - jz_mean * jz_mean, 0.0};

    // J^z in the energy eigenbasis, exploiting its diagonality.
    const Eigen::MatrixXd jz_eigen =
        dec.vectors.transpose() * jz.asDiagonal() * dec.vectors;
    rep.qv_jz = {qv_spectral_eigenbasis(dec, jz_eigen, 1e-10 * spec.coupling_j), 0.0};
    const double qfi = qfi_spectral_eigenbasis(dec, jz_eigen);
    rep.qfi_jz = Quantity{qfi, 0.0};
    rep.xi_r_sq = {n * rep.var_jy.value / (jx_mean * jx_mean), 0.0};
    if (qfi > 0) rep.chi_sq = Quantity{n / qfi, 0.0};
    return rep;
}

}  // namespace tfim
