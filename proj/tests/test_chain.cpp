#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <complex>

#include "tfim/chain.hpp"
#include "tfim/dense_ed.hpp"

using Catch::Approx;
using cplx = std::complex<double>;
using tfim::ModelSpec;

namespace {

ModelSpec chain_spec(int n, double g, double t) {
    ModelSpec s;
    s.dimension = 1;
    s.linear_size = n;
    s.field_ratio = g;
    s.temperature = t;
    return s;
}

// <sigma^z_i sigma^z_j> from a dense thermal state.
double dense_zz(const tfim::SpectralDecomposition& dec, int n, int i, int j) {
    double total = 0.0;
    for (long k = 0; k < dec.energies.size(); ++k) {
        if (dec.weights[k] < 1e-16) continue;
        double val = 0.0;
        for (long b = 0; b < (1L << n); ++b) {
            const double zi = (b >> i) & 1 ? 1.0 : -1.0;
            const double zj = (b >> j) & 1 ? 1.0 : -1.0;
            val += zi * zj * dec.vectors(b, k) * dec.vectors(b, k);
        }
        total += dec.weights[k] * val;
    }
    return total;
}

// <sigma^y_i sigma^y_j>, i != j, from a dense thermal state.
double dense_yy(const tfim::SpectralDecomposition& dec, int n, int i, int j) {
    const long mask = (1L << i) | (1L << j);
    double total = 0.0;
    for (long k = 0; k < dec.energies.size(); ++k) {
        if (dec.weights[k] < 1e-16) continue;
        double val = 0.0;
        for (long b = 0; b < (1L << n); ++b) {
            const bool same = (((b >> i) ^ (b >> j)) & 1) == 0;
            val += (same ? -1.0 : 1.0) * dec.vectors(b ^ mask, k) * dec.vectors(b, k);
        }
        total += dec.weights[k] * val;
    }
    return total;
}

// <sigma^x_i> from a dense thermal state.
double dense_x(const tfim::SpectralDecomposition& dec, int n, int i) {
    double total = 0.0;
    for (long k = 0; k < dec.energies.size(); ++k) {
        if (dec.weights[k] < 1e-16) continue;
        double val = 0.0;
        for (long b = 0; b < (1L << n); ++b)
            val += dec.vectors(b ^ (1L << i), k) * dec.vectors(b, k);
        total += dec.weights[k] * val;
    }
    return total;
}

tfim::SpectralDecomposition dense_state(const ModelSpec& spec) {
    const double beta = spec.temperature == 0 ? 1e6 : 1.0 / spec.temperature;
    return tfim::decompose(tfim::build_dense_hamiltonian(spec), beta);
}

}  // namespace

TEST_CASE("fermionic ground energy matches dense diagonalization") {
    for (double g : {0.3, 0.5, 1.0, 1.7}) {
        const auto spec = chain_spec(8, g, 0.0);
        const auto sol = tfim::solve_chain(8, g, 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            tfim::build_dense_hamiltonian(spec), Eigen::EigenvaluesOnly);
        CHECK(sol.ground_energy() == Approx(es.eigenvalues()[0]).epsilon(1e-10));
    }
}

TEST_CASE("full many-body spectrum is additive in mode energies") {
    // open-boundary mapping is exact on the whole Fock space: the lowest
    // excited level equals E0 + min lambda_k
    const auto sol = tfim::solve_chain(8, 1.4, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        tfim::build_dense_hamiltonian(chain_spec(8, 1.4, 0.0)), Eigen::EigenvaluesOnly);
    CHECK(sol.ground_energy() + sol.lambda.minCoeff() == Approx(es.eigenvalues()[1]).epsilon(1e-9));
}

TEST_CASE("transverse magnetization matches dense thermal values") {
    for (double t : {0.0, 0.4, 1.5}) {
        for (double g : {0.6, 1.2}) {
            const auto sol = tfim::solve_chain(6, g, t);
            const auto dec = dense_state(chain_spec(6, g, t));
            double mx = 0.0;
            for (int i = 0; i < 6; ++i) mx += 0.5 * dense_x(dec, 6, i);
            CHECK(tfim::transverse_magnetization(sol) == Approx(mx).epsilon(1e-7));
        }
    }
}

TEST_CASE("static pair correlators match dense thermal values") {
    for (double t : {0.0, 0.5}) {
        const double g = 0.8;
        const auto sol = tfim::solve_chain(6, g, t);
        const auto dec = dense_state(chain_spec(6, g, t));
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) {
                CHECK(tfim::zz_correlation(sol, i, j) ==
                      Approx(0.25 * dense_zz(dec, 6, i, j)).margin(1e-8));
                CHECK(tfim::yy_correlation(sol, i, j) ==
                      Approx(0.25 * dense_yy(dec, 6, i, j)).margin(1e-8));
            }
    }
}

TEST_CASE("collective variances match dense thermal values") {
    for (double t : {0.0, 0.7}) {
        for (double g : {0.45, 1.1}) {
            const auto spec = chain_spec(8, g, t);
            const auto sol = tfim::solve_chain(8, g, t);
            const auto rep = tfim::exact_observables(spec);
            CHECK(tfim::var_jy(sol) == Approx(rep.var_jy.value).margin(1e-7));
            CHECK(tfim::var_jz(sol) == Approx(rep.var_jz.value).margin(1e-7));
        }
    }
}

TEST_CASE("real-time pair correlator matches the dense Lehmann sum") {
    const int n = 6;
    const double g = 0.8, temp = 0.5;
    const auto sol = tfim::solve_chain(n, g, temp);
    const auto dec = dense_state(chain_spec(n, g, temp));
    const long dim = 1L << n;

    auto sz_eigen = [&](int site) {
        Eigen::VectorXd d(dim);
        for (long b = 0; b < dim; ++b) d[b] = (b >> site) & 1 ? 1.0 : -1.0;
        return Eigen::MatrixXd(dec.vectors.transpose() * d.asDiagonal() * dec.vectors);
    };
    for (double time : {0.3, 1.7}) {
        for (auto [i, j] : {std::pair{0, 0}, {1, 4}, {2, 3}}) {
            const Eigen::MatrixXd oi = sz_eigen(i), oj = sz_eigen(j);
            cplx ref = 0.0;
            for (long a = 0; a < dim; ++a) {
                if (dec.weights[a] < 1e-16) continue;
                for (long b = 0; b < dim; ++b) {
                    const double de = dec.energies[a] - dec.energies[b];
                    ref += dec.weights[a] * std::polar(1.0, de * time) * oi(a, b) * oj(b, a);
                }
            }
            const cplx got = tfim::dynamic_zz_correlation(sol, i, j, time);
            CHECK(std::abs(got - 0.25 * ref) < 1e-7);
        }
    }
}

TEST_CASE("imaginary-time collective correlator matches the dense Lehmann sum") {
    const int n = 5;
    const double g = 0.9, temp = 0.4;
    const auto sol = tfim::solve_chain(n, g, temp);
    const auto dec = dense_state(chain_spec(n, g, temp));
    const Eigen::VectorXd jz = tfim::detail::jz_diagonal(n);
    const Eigen::MatrixXd o = dec.vectors.transpose() * jz.asDiagonal() * dec.vectors;
    const long dim = 1L << n;

    for (double tau : {0.1, 0.8, 1.24}) {
        double ref = 0.0;
        for (long a = 0; a < dim; ++a) {
            if (dec.weights[a] < 1e-16) continue;
            for (long b = 0; b < dim; ++b)
                ref += dec.weights[a] * std::exp(tau * (dec.energies[a] - dec.energies[b])) *
                       o(a, b) * o(b, a);
        }
        CHECK(tfim::jz_imaginary_correlator(sol, tau) == Approx(ref).margin(1e-7));
    }
}

TEST_CASE("quantum variance quadrature matches the dense spectral value") {
    for (double t : {0.0, 0.5, 1.5}) {
        const auto spec = chain_spec(7, 0.8, t);
        const auto sol = tfim::solve_chain(7, 0.8, t);
        const auto rep = tfim::exact_observables(spec);
        const auto qv = tfim::qv_jz(sol);
        CHECK_FALSE(qv.quadrature_flag);
        CHECK(qv.qv == Approx(rep.qv_jz.value).margin(2e-5));
    }
}

TEST_CASE("structure-factor route to the QFI matches the dense spectral value") {
    for (double t : {0.3, 0.8}) {
        const auto spec = chain_spec(6, 0.8, t);
        const auto sol = tfim::solve_chain(6, 0.8, t);
        const auto rep = tfim::exact_observables(spec);
        tfim::DsfParams params;
        params.n_t = 1024;
        const auto dsf = tfim::qfi_from_dsf(sol, params);
        REQUIRE(rep.qfi_jz);
        CHECK(dsf.qfi == Approx(rep.qfi_jz->value).epsilon(5e-3));
    }
}

TEST_CASE("report assembly and input validation") {
    const auto rep = tfim::chain_observables(chain_spec(8, 1.2, 0.5));
    CHECK(rep.xi_r_sq.value ==
          Approx(8.0 * rep.var_jy.value / (rep.jx_mean.value * rep.jx_mean.value)));
    REQUIRE(rep.qfi_jz);
    CHECK(rep.qfi_jz->value >= 4.0 * rep.qv_jz.value - 1e-6);
    CHECK(rep.qfi_jz->value <= 12.0 * rep.qv_jz.value + 1e-6);

    CHECK_THROWS_AS(tfim::solve_chain(1, 1.0, 0.0), std::invalid_argument);
    auto bad = chain_spec(8, 1.0, 0.0);
    bad.dimension = 2;
    bad.linear_size = 3;
    CHECK_THROWS_AS(tfim::chain_observables(bad), std::invalid_argument);
}
