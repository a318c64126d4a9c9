#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfim/model.hpp"

namespace tfim {

/// Wineland squeezing parameter xi_R^2 = N Var(J^y) / <J^x>^2 with first-order
/// error propagation. The division hazard flag marks |<J^x>| < 3 sigma.
struct SqueezingResult {
    Quantity value;
    bool division_hazard = false;
};

inline SqueezingResult squeezing_parameter(const Quantity& jx_mean, const Quantity& var_jy,
                                           int n) {
    if (jx_mean.value == 0.0)
        throw std::invalid_argument("squeezing_parameter: <J^x> must be nonzero");
    SqueezingResult res;
    res.division_hazard = std::abs(jx_mean.value) < 3.0 * jx_mean.error;
    const double xi = n * var_jy.value / (jx_mean.value * jx_mean.value);
    double rel_sq = 0.0;
    if (var_jy.value != 0.0) {
        const double r1 = var_jy.error / var_jy.value;
        const double r2 = 2.0 * jx_mean.error / jx_mean.value;
        rel_sq = r1 * r1 + r2 * r2;
    }
    res.value = {xi, std::abs(xi) * std::sqrt(rel_sq)};
    return res;
}

/// chi^2 = N / QFI; values below 1 witness sub-shot-noise capability.
inline Quantity chi_squared(const Quantity& qfi, int n) {
    if (qfi.value <= 0) throw std::invalid_argument("chi_squared: QFI must be positive");
    const double chi = n / qfi.value;
    return {chi, chi * qfi.error / qfi.value};
}

/// Quantum Cramer-Rao bound on the phase variance after k measurements.
inline double cramer_rao(double k, double qfi) {
    if (k <= 0 || qfi <= 0) throw std::invalid_argument("cramer_rao: positive inputs required");
    return 1.0 / (k * qfi);
}

/// Uncertainty-principle lower bound on Var(J^y) given <J^x> and Var(J^z).
inline double heisenberg_lower_bound(double jx_mean, double var_jz) {
    if (var_jz <= 0) return 0.0;
    return jx_mean * jx_mean / (4.0 * var_jz);
}

/// Admissible interval [4 QV/N, 12 QV/N] for the QFI density chi^{-2}.
struct QvSandwich {
    double lower = 0.0;
    double upper = 0.0;
    bool contains(double chi_inv_sq) const {
        return chi_inv_sq >= lower - 1e-12 && chi_inv_sq <= upper + 1e-12;
    }
};

inline QvSandwich qv_sandwich(double qv, int n) {
    if (n <= 0) throw std::invalid_argument("qv_sandwich: N must be positive");
    return {4.0 * qv / n, 12.0 * qv / n};
}

/// Predicted QFI-density exponent zeta = (1 - eta) / min(d, 3); pass a
/// negative eta (or omit) to use the per-dimension default.
inline double zeta_prediction(int dimension, double eta = -1.0) {
    if (eta < 0) eta = default_eta(dimension);
    const int d_eff = dimension == kInfiniteDim ? 3 : std::min(dimension, 3);
    return (1.0 - eta) / d_eff;
}

/// One data point of a finite-size scaling fit.
struct ScalingPoint {
    double size = 0.0;
    double value = 0.0;
    double error = 0.0;  // zero for exact data
};

struct ScalingFit {
    double amplitude = 0.0;
    double exponent = 0.0;
    double exponent_error = 0.0;
    double residual = 0.0;  // chi^2 in log space (weighted) or RMS (unweighted)
    bool narrow_span = false;  // sizes span less than one decade
    std::vector<ScalingPoint> points;
};

/// Weighted least-squares power-law fit v = a * size^exponent in log-log
/// space. Points with errors weight by 1/sigma^2 of log(v); exact points get
/// uniform weights and a residual-based exponent error.
inline ScalingFit fit_power_law(const std::vector<ScalingPoint>& points) {
    const int m = static_cast<int>(points.size());
    if (m < 4) throw std::invalid_argument("fit_power_law: at least 4 points required");
    bool weighted = false;
    for (const auto& p : points) {
        if (p.size <= 0 || p.value <= 0)
            throw std::invalid_argument("fit_power_law: sizes and values must be positive");
        if (p.error > 0) weighted = true;
    }

    double wsum = 0, xm = 0, ym = 0;
    std::vector<double> x(m), y(m), w(m);
    double size_min = points[0].size, size_max = points[0].size;
    for (int i = 0; i < m; ++i) {
        x[i] = std::log(points[i].size);
        y[i] = std::log(points[i].value);
        const double sigma = weighted ? std::max(points[i].error / points[i].value, 1e-12) : 1.0;
        w[i] = 1.0 / (sigma * sigma);
        wsum += w[i];
        xm += w[i] * x[i];
        ym += w[i] * y[i];
        size_min = std::min(size_min, points[i].size);
        size_max = std::max(size_max, points[i].size);
    }
    xm /= wsum;
    ym /= wsum;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    if (sxx == 0) throw std::invalid_argument("fit_power_law: degenerate sizes");

    ScalingFit fit;
    fit.points = points;
    fit.exponent = sxy / sxx;
    const double intercept = ym - fit.exponent * xm;
    fit.amplitude = std::exp(intercept);
    double chi2 = 0;
    for (int i = 0; i < m; ++i) {
        const double r = y[i] - intercept - fit.exponent * x[i];
        chi2 += w[i] * r * r;
    }
    fit.residual = chi2;
    fit.exponent_error = weighted ? std::sqrt(1.0 / sxx)
                                  : std::sqrt(chi2 / ((m - 2) * sxx));
    fit.narrow_span = size_max < 10.0 * size_min;
    return fit;
}

/// Inverse squeezing in decibel; positive values mean metrological gain.
inline double xi_inverse_db(double xi_r_sq) {
    if (xi_r_sq <= 0) throw std::invalid_argument("xi_inverse_db: xi_R^2 must be positive");
    return -10.0 * std::log10(xi_r_sq);
}

/// One grid point of a phase-diagram scan; `failure` holds the error message
/// of a backend that threw, in which case `report` is absent.
struct ScanPoint {
    double g = 0.0;
    double t_over_j = 0.0;
    std::optional<ObservableReport> report;
    std::optional<double> xi_inv_db;
    bool no_squeezing = false;  // xi_R^{-2} <= 1
    std::string failure;
};

/// Evaluate a backend over the (g, T) grid; per-point failures are recorded
/// and the scan continues.
inline std::vector<ScanPoint> scan_phase_diagram(
    const ModelSpec& base, const std::vector<double>& g_values,
    const std::vector<double>& t_values,
    const std::function<ObservableReport(const ModelSpec&)>& backend) {
    if (g_values.empty() || t_values.empty())
        throw std::invalid_argument("scan_phase_diagram: empty grid");
    std::vector<ScanPoint> out;
    out.reserve(g_values.size() * t_values.size());
    for (double t : t_values) {
        for (double g : g_values) {
            ScanPoint pt;
            pt.g = g;
            pt.t_over_j = t;
            ModelSpec spec = base;
            spec.field_ratio = g;
            spec.temperature = t;
            try {
                pt.report = backend(spec);
                pt.xi_inv_db = xi_inverse_db(pt.report->xi_r_sq.value);
                pt.no_squeezing = pt.report->xi_r_sq.value >= 1.0;
            } catch (const std::exception& e) {
                pt.failure = e.what();
            }
            out.push_back(std::move(pt));
        }
    }
    return out;
}

}  // namespace tfim
