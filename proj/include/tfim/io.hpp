#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/metrology.hpp"
#include "tfim/model.hpp"

namespace tfim {

enum class Backend { Oracle, Chain, Collective, Qmc };

inline std::string to_string(Backend b) {
    switch (b) {
        case Backend::Oracle: return "oracle";
        case Backend::Chain: return "chain";
        case Backend::Collective: return "collective";
        case Backend::Qmc: return "qmc";
    }
    throw std::logic_error("unknown backend");
}

inline Backend backend_from_string(const std::string& s) {
    if (s == "oracle") return Backend::Oracle;
    if (s == "chain") return Backend::Chain;
    if (s == "collective") return Backend::Collective;
    if (s == "qmc") return Backend::Qmc;
    throw std::invalid_argument("unknown backend '" + s + "'");
}

enum class OutputFormat { Csv, Json };

/// Configuration problems carry the offending field path in the message.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Canonical observable column order; requests are validated against it.
inline const std::vector<std::string>& known_observables() {
    static const std::vector<std::string> names = {
        "jx", "var_jy", "var_jz", "qv_jz", "qfi_jz", "xi_r_sq", "chi_sq"};
    return names;
}

struct RunConfig {
    ModelSpec model;  // field_ratio / temperature overridden per grid point
    Backend backend = Backend::Chain;
    std::vector<std::string> observables;
    std::vector<double> g_grid;
    std::vector<double> t_grid;  // T/J per point (betaJ input is converted)
    long sweeps = 200000;
    long thermalization = 20000;
    int bins = 32;
    std::uint64_t seed = 1;
    std::string checkpoint;
    bool resume = false;
    std::string out_path;
    OutputFormat format = OutputFormat::Csv;
    int workers = 1;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) config_fail(path + "." + key, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_fail(path + "." + key, e.what());
    }
}

template <class T>
T get_or(const nlohmann::json& j, const std::string& path, const std::string& key, T dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_fail(path + "." + key, e.what());
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using detail::config_fail;
    using detail::get_field;
    using detail::get_or;
    RunConfig cfg;

    if (!j.contains("model") || !j.at("model").is_object())
        config_fail("model", "missing object");
    const auto& jm = j.at("model");
    const auto& jdim = jm.contains("dimension") ? jm.at("dimension") : nlohmann::json();
    if (jdim.is_number_integer())
        cfg.model.dimension = jdim.get<int>();
    else if (jdim.is_string() && (jdim == "inf" || jdim == "infinite"))
        cfg.model.dimension = kInfiniteDim;
    else
        config_fail("model.dimension", "expected 1, 2, 3 or \"inf\"");
    cfg.model.linear_size = get_field<int>(jm, "model", "linear_size");
    cfg.model.coupling_j = get_or<double>(jm, "model", "coupling_j", 1.0);
    const std::string bnd = get_or<std::string>(jm, "model", "boundary",
                                                cfg.model.dimension == 1 ? "open" : "periodic");
    if (bnd == "open")
        cfg.model.boundary = Boundary::Open;
    else if (bnd == "periodic")
        cfg.model.boundary = Boundary::Periodic;
    else
        config_fail("model.boundary", "expected \"open\" or \"periodic\"");
    try {
        cfg.model.validate();
    } catch (const std::exception& e) {
        config_fail("model", e.what());
    }

    cfg.backend = backend_from_string(get_field<std::string>(j, "", "backend"));

    cfg.observables = get_field<std::vector<std::string>>(j, "", "observables");
    if (cfg.observables.empty()) config_fail("observables", "list must be non-empty");
    for (const auto& name : cfg.observables) {
        const auto& known = known_observables();
        if (std::find(known.begin(), known.end(), name) == known.end())
            config_fail("observables", "unknown observable '" + name + "'");
    }

    if (!j.contains("grid") || !j.at("grid").is_object())
        config_fail("grid", "missing object");
    const auto& jg = j.at("grid");
    cfg.g_grid = get_field<std::vector<double>>(jg, "grid", "g");
    const bool has_t = jg.contains("T_over_J"), has_b = jg.contains("betaJ");
    if (has_t == has_b)
        config_fail("grid", "exactly one of T_over_J and betaJ is required");
    if (has_t) {
        cfg.t_grid = get_field<std::vector<double>>(jg, "grid", "T_over_J");
    } else {
        for (double bj : get_field<std::vector<double>>(jg, "grid", "betaJ")) {
            if (bj <= 0) config_fail("grid.betaJ", "values must be positive");
            cfg.t_grid.push_back(1.0 / bj);
        }
    }
    if (cfg.g_grid.empty() || cfg.t_grid.empty()) config_fail("grid", "grids must be non-empty");

    if (j.contains("qmc")) {
        const auto& jq = j.at("qmc");
        cfg.sweeps = get_or<long>(jq, "qmc", "sweeps", cfg.sweeps);
        cfg.thermalization = get_or<long>(jq, "qmc", "thermalization", cfg.thermalization);
        cfg.bins = get_or<int>(jq, "qmc", "bins", cfg.bins);
        cfg.seed = get_or<std::uint64_t>(jq, "qmc", "seed", cfg.seed);
        cfg.checkpoint = get_or<std::string>(jq, "qmc", "checkpoint", "");
        cfg.resume = get_or<bool>(jq, "qmc", "resume", false);
    }
    if (j.contains("output")) {
        const auto& jo = j.at("output");
        cfg.out_path = get_or<std::string>(jo, "output", "path", "");
        const std::string fmt = get_or<std::string>(jo, "output", "format", "csv");
        if (fmt == "csv")
            cfg.format = OutputFormat::Csv;
        else if (fmt == "json")
            cfg.format = OutputFormat::Json;
        else
            config_fail("output.format", "expected \"csv\" or \"json\"");
    }
    cfg.workers = get_or<int>(j, "", "workers", 1);
    if (cfg.workers < 1) config_fail("workers", "must be >= 1");

    // backend / model compatibility
    const int d = cfg.model.dimension;
    switch (cfg.backend) {
        case Backend::Chain:
            if (d != 1) config_fail("backend", "chain requires dimension 1");
            break;
        case Backend::Collective:
            if (d != kInfiniteDim) config_fail("backend", "collective requires dimension \"inf\"");
            break;
        case Backend::Qmc:
            if (d != 2 && d != 3) config_fail("backend", "qmc requires dimension 2 or 3");
            for (double t : cfg.t_grid)
                if (t <= 0) config_fail("grid", "qmc requires positive temperature");
            break;
        case Backend::Oracle:
            if (cfg.model.n_sites() > 16) config_fail("backend", "oracle requires N <= 16");
            break;
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_run_config(j);
}

/// One output row of a scan; `report` is absent when the backend failed.
struct ResultRow {
    double g = 0.0;
    double t_over_j = 0.0;
    int n = 0;
    std::optional<ObservableReport> report;
    std::optional<double> xi_inv_db;
    bool no_squeezing = false;
    std::string failure;
};

namespace detail {

/// Shortest decimal that round-trips the double exactly.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char probe[40];
            std::snprintf(probe, sizeof probe, "%.*g", prec, v);
            if (std::strtod(probe, nullptr) == v) return probe;
        }
    }
    return buf;
}

inline const Quantity* pick_observable(const ObservableReport& rep, const std::string& name) {
    if (name == "jx") return &rep.jx_mean;
    if (name == "var_jy") return &rep.var_jy;
    if (name == "var_jz") return &rep.var_jz;
    if (name == "qv_jz") return &rep.qv_jz;
    if (name == "xi_r_sq") return &rep.xi_r_sq;
    if (name == "qfi_jz") return rep.qfi_jz ? &*rep.qfi_jz : nullptr;
    if (name == "chi_sq") return rep.chi_sq ? &*rep.chi_sq : nullptr;
    throw std::invalid_argument("unknown observable '" + name + "'");
}

/// Requested names reordered into the canonical column order.
inline std::vector<std::string> ordered_columns(const std::vector<std::string>& requested) {
    std::vector<std::string> cols;
    for (const auto& name : known_observables())
        if (std::find(requested.begin(), requested.end(), name) != requested.end())
            cols.push_back(name);
    return cols;
}

}  // namespace detail

/// Fixed schema: g, T_over_J, N, observable columns, error columns, then the
/// decibel gain when xi_r_sq is requested. Missing values stay empty.
inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows,
                              const std::vector<std::string>& requested,
                              const std::vector<std::string>& meta = {}) {
    const auto cols = detail::ordered_columns(requested);
    for (const auto& line : meta) out << "# " << line << "\n";
    const bool with_db =
        std::find(cols.begin(), cols.end(), "xi_r_sq") != cols.end();
    out << "g,T_over_J,N";
    for (const auto& c : cols) out << "," << c;
    for (const auto& c : cols) out << ",err_" << c;
    if (with_db) out << ",xi_inv_db";
    out << "\n";
    for (const auto& row : rows) {
        out << detail::fmt_double(row.g) << "," << detail::fmt_double(row.t_over_j) << ","
            << row.n;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& c : cols) {
                out << ",";
                if (!row.report) continue;
                const Quantity* q = detail::pick_observable(*row.report, c);
                if (q) out << detail::fmt_double(pass == 0 ? q->value : q->error);
            }
        if (with_db) {
            out << ",";
            if (row.xi_inv_db) out << detail::fmt_double(*row.xi_inv_db);
        }
        out << "\n";
    }
}

inline void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows,
                               const std::vector<std::string>& requested,
                               const std::map<std::string, std::string>& meta = {}) {
    const auto cols = detail::ordered_columns(requested);
    nlohmann::json j;
    for (const auto& [k, v] : meta) j["meta"][k] = v;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json jr;
        jr["g"] = row.g;
        jr["T_over_J"] = row.t_over_j;
        jr["N"] = row.n;
        if (!row.failure.empty()) jr["failure"] = row.failure;
        if (row.report) {
            for (const auto& c : cols) {
                const Quantity* q = detail::pick_observable(*row.report, c);
                if (!q) continue;
                jr[c] = q->value;
                jr["err_" + c] = q->error;
            }
            if (row.xi_inv_db) jr["xi_inv_db"] = *row.xi_inv_db;
            jr["no_squeezing"] = row.no_squeezing;
        }
        j["rows"].push_back(std::move(jr));
    }
    out << j.dump(2) << "\n";
}

/// Generic results table: header names plus per-row optional cells.
struct ResultsTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return static_cast<int>(k);
        throw std::invalid_argument("results table has no column '" + name + "'");
    }
};

inline ResultsTable read_results_csv(std::istream& in) {
    ResultsTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (!have_header) {
            table.columns = cells;
            have_header = true;
            continue;
        }
        std::vector<std::optional<double>> row(table.columns.size());
        for (std::size_t k = 0; k < cells.size() && k < row.size(); ++k)
            if (!cells[k].empty()) row[k] = std::strtod(cells[k].c_str(), nullptr);
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("empty results file");
    return table;
}

inline ResultsTable read_results_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file '" + path + "'");
    return read_results_csv(in);
}

}  // namespace tfim
