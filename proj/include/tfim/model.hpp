#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfim {

/// Marker value for the infinite-range (all-to-all) model.
inline constexpr int kInfiniteDim = 0;

enum class Boundary { Open, Periodic };

/// Critical couplings g_c = Gamma_c/J of the transverse-field Ising model.
inline double critical_coupling(int dimension) {
    switch (dimension) {
        case 1: return 0.5;
        case 2: return 1.52219;
        case 3: return 2.579;
        case kInfiniteDim: return 1.0;
        default: throw std::invalid_argument("critical_coupling: dimension must be 1, 2, 3 or infinite");
    }
}

/// Correlation-function exponent eta used in the QFI-density scaling prediction.
inline double default_eta(int dimension) {
    switch (dimension) {
        case 1: return 0.25;
        case 2: return 0.0364;  // 3d Ising universality
        default: return 0.0;    // mean field at and above d_c = 3
    }
}

/// Input record shared by every backend.
struct ModelSpec {
    int dimension = 1;       // 1, 2, 3 or kInfiniteDim
    int linear_size = 2;     // sites per edge; total spin count N for d = infinity
    double coupling_j = 1.0; // J > 0, energy unit
    double field_ratio = 1.0; // g = Gamma/J
    double temperature = 0.0; // T in units of J; 0 means ground state
    Boundary boundary = Boundary::Open;

    int n_sites() const {
        if (dimension == kInfiniteDim) return linear_size;
        long n = 1;
        for (int k = 0; k < dimension; ++k) n *= linear_size;
        if (n > std::numeric_limits<int>::max()) throw std::overflow_error("lattice too large");
        return static_cast<int>(n);
    }

    double gamma() const { return field_ratio * coupling_j; }
    double beta() const {
        if (temperature < 0) throw std::invalid_argument("negative temperature");
        return temperature == 0 ? std::numeric_limits<double>::infinity()
                                : 1.0 / (temperature * coupling_j);
    }

    void validate() const {
        if (dimension != kInfiniteDim && (dimension < 1 || dimension > 3))
            throw std::invalid_argument("dimension must be 1, 2, 3 or infinite");
        if (linear_size < 1) throw std::invalid_argument("linear size must be positive");
        if (coupling_j <= 0) throw std::invalid_argument("coupling J must be positive");
        if (field_ratio < 0) throw std::invalid_argument("field ratio g must be non-negative");
        if (temperature < 0) throw std::invalid_argument("temperature must be non-negative");
    }
};

/// Nearest-neighbour bond list of the hypercubic lattice. Sites are indexed
/// row-major; for d = infinity every pair is a bond.
inline std::vector<std::pair<int, int>> lattice_bonds(const ModelSpec& spec) {
    spec.validate();
    std::vector<std::pair<int, int>> bonds;
    const int n = spec.n_sites();
    if (spec.dimension == kInfiniteDim) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) bonds.emplace_back(i, j);
        return bonds;
    }
    const int L = spec.linear_size;
    const bool periodic = spec.boundary == Boundary::Periodic;
    std::vector<int> stride(spec.dimension);
    stride[0] = 1;
    for (int k = 1; k < spec.dimension; ++k) stride[k] = stride[k - 1] * L;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < spec.dimension; ++k) {
            const int coord = (i / stride[k]) % L;
            if (coord + 1 < L) {
                bonds.emplace_back(i, i + stride[k]);
            } else if (periodic && L > 2) {
                // L = 2 wrap bonds would duplicate existing ones; drop them
                bonds.emplace_back(i, i - (L - 1) * stride[k]);
            }
        }
    }
    return bonds;
}

/// A measured value with a standard error (zero for exact backends).
struct Quantity {
    double value = 0.0;
    double error = 0.0;
};

/// Unified output record of every backend.
struct ObservableReport {
    Quantity jx_mean;   // <J^x>
    Quantity var_jy;    // Var(J^y)
    Quantity var_jz;    // Var(J^z)
    Quantity qv_jz;     // quantum variance of J^z
    std::optional<Quantity> qfi_jz;  // QFI(J^z); absent when uncomputable
    Quantity xi_r_sq;   // Wineland squeezing parameter
    std::optional<Quantity> chi_sq;  // N/QFI
    bool degenerate_ground_warning = false;
    bool qmc_consistency_flag = false;  // thermalization drift or unconverged errors
};

}  // namespace tfim
