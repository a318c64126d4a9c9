#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "tfim/chain.hpp"
#include "tfim/collective.hpp"
#include "tfim/dense_ed.hpp"
#include "tfim/io.hpp"
#include "tfim/metrology.hpp"
#include "tfim/qmc.hpp"

namespace tfim {

/// Combined SSE report: <J^x> and Var(J^y) from the x-basis representation,
/// Var(J^z) and the quantum variance from the z-basis one. No QFI estimate.
inline ObservableReport qmc_observables(const ModelSpec& spec, const QmcOptions& opt) {
    QmcOptions opt_x = opt;
    QmcOptions opt_z = opt;
    opt_z.subsystems.clear();
    opt_z.correlation_matrix = false;
    opt_z.stream = opt.stream * 2;
    opt_x.stream = opt.stream * 2 + 1;
    if (!opt.checkpoint_path.empty()) {
        opt_z.checkpoint_path = opt.checkpoint_path + ".z";
        opt_x.checkpoint_path = opt.checkpoint_path + ".x";
    }
    const auto rx = run_sse(spec, Representation::XBasis, opt_x);
    const auto rz = run_sse(spec, Representation::ZBasis, opt_z);

    ObservableReport rep;
    rep.jx_mean = {rx.at("jx").mean, rx.at("jx").std_error};
    rep.var_jy = {rx.at("var_jy").mean, rx.at("var_jy").std_error};
    rep.var_jz = {rz.at("var_jz").mean, rz.at("var_jz").std_error};
    rep.qv_jz = {rz.at("qv_jz").mean, rz.at("qv_jz").std_error};
    rep.xi_r_sq = squeezing_parameter(rep.jx_mean, rep.var_jy, spec.n_sites()).value;
    // rebinning flags on individual estimates are too noisy at ~30 bins to
    // gate on; only the energy drift check marks the run as suspect
    rep.qmc_consistency_flag = rx.thermalization_flag || rz.thermalization_flag;
    return rep;
}

/// Evaluate a single grid point on the configured backend. `stream`
/// distinguishes QMC points so that scan scheduling cannot affect results.
inline ObservableReport evaluate_backend(const RunConfig& cfg, const ModelSpec& spec,
                                         std::uint64_t stream) {
    switch (cfg.backend) {
        case Backend::Oracle: return exact_observables(spec);
        case Backend::Chain: {
            // the spectral-function QFI dominates the cost; skip it unless asked
            const auto& obs = cfg.observables;
            const bool with_qfi =
                std::find(obs.begin(), obs.end(), "qfi_jz") != obs.end() ||
                std::find(obs.begin(), obs.end(), "chi_sq") != obs.end();
            return chain_observables(spec, {}, with_qfi);
        }
        case Backend::Collective: return collective_observables(spec);
        case Backend::Qmc: {
            QmcOptions opt;
            opt.sweeps = cfg.sweeps;
            opt.thermalization = cfg.thermalization;
            opt.bins = cfg.bins;
            opt.seed = cfg.seed;
            opt.stream = stream;
            opt.resume = cfg.resume;
            if (!cfg.checkpoint.empty())
                opt.checkpoint_path = cfg.checkpoint + ".p" + std::to_string(stream);
            return qmc_observables(spec, opt);
        }
    }
    throw std::logic_error("unknown backend");
}

/// Run the full (g, T) grid with a bounded worker pool. Rows are keyed by
/// grid coordinates, so the output is independent of scheduling order;
/// per-point failures are recorded and the scan continues.
inline std::vector<ResultRow> run_scan(const RunConfig& cfg) {
    const std::size_t n_jobs = cfg.g_grid.size() * cfg.t_grid.size();
    std::vector<ResultRow> rows(n_jobs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n_jobs) return;
            const std::size_t it = k / cfg.g_grid.size();
            const std::size_t ig = k % cfg.g_grid.size();
            ResultRow& row = rows[k];
            row.g = cfg.g_grid[ig];
            row.t_over_j = cfg.t_grid[it];
            ModelSpec spec = cfg.model;
            spec.field_ratio = row.g;
            spec.temperature = row.t_over_j;
            row.n = spec.n_sites();
            try {
                row.report = evaluate_backend(cfg, spec, k);
                if (row.report->xi_r_sq.value > 0)
                    row.xi_inv_db = xi_inverse_db(row.report->xi_r_sq.value);
                row.no_squeezing = row.report->xi_r_sq.value >= 1.0;
            } catch (const std::exception& e) {
                row.failure = e.what();
            }
        }
    };

    const int n_workers = std::min<std::size_t>(cfg.workers, n_jobs);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

}  // namespace tfim
