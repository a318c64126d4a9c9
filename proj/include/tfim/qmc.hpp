#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tfim/model.hpp"
#include "tfim/qmc_stats.hpp"
#include "tfim/sse_x.hpp"
#include "tfim/sse_z.hpp"

namespace tfim {

/// Quantization axis of the SSE representation. The x basis (field-diagonal)
/// measures <J^x> and the transverse correlations feeding Var(J^y); the
/// z basis (Ising-diagonal) measures Var(J^z) and its quantum variance.
enum class Representation { XBasis, ZBasis };

inline const char* to_string(Representation r) {
    return r == Representation::XBasis ? "x-basis" : "z-basis";
}

/// A set of lattice sites forming a centered segment, square or cube used
/// for subsystem collective-spin variances.
struct SubsystemGeometry {
    enum class Shape { Segment, Square, Cube };
    Shape shape = Shape::Square;
    int extent = 1;
    std::vector<int> sites;

    std::string label() const {
        const char* s = shape == Shape::Segment ? "segment"
                      : shape == Shape::Square  ? "square"
                                                : "cube";
        return std::string(s) + std::to_string(extent);
    }
};

/// Build a subsystem of the given shape and linear extent centered in the
/// lattice (under periodic boundaries the embedding offset is immaterial).
inline SubsystemGeometry centered_subsystem(const ModelSpec& spec,
                                            SubsystemGeometry::Shape shape,
                                            int extent) {
    const int da = shape == SubsystemGeometry::Shape::Segment ? 1
                 : shape == SubsystemGeometry::Shape::Square  ? 2
                                                              : 3;
    if (spec.dimension == kInfiniteDim || da > spec.dimension)
        throw std::invalid_argument("centered_subsystem: shape does not fit dimension");
    const int L = spec.linear_size;
    if (extent < 1 || extent > L)
        throw std::invalid_argument("centered_subsystem: extent outside lattice");
    SubsystemGeometry g;
    g.shape = shape;
    g.extent = extent;
    std::vector<int> stride(spec.dimension, 1);
    for (int k = 1; k < spec.dimension; ++k) stride[k] = stride[k - 1] * L;
    int base = 0;
    for (int k = 0; k < spec.dimension; ++k)
        base += (k < da ? (L - extent) / 2 : L / 2) * stride[k];
    int count = 1;
    for (int k = 0; k < da; ++k) count *= extent;
    g.sites.reserve(count);
    for (int c = 0; c < count; ++c) {
        int site = base, rem = c;
        for (int k = 0; k < da; ++k) {
            site += (rem % extent) * stride[k];
            rem /= extent;
        }
        g.sites.push_back(site);
    }
    return g;
}

/// Controls for a single SSE Markov chain.
struct QmcOptions {
    long sweeps = 100000;        // measurement sweeps
    long thermalization = 10000; // discarded sweeps
    int bins = 32;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    std::vector<SubsystemGeometry> subsystems;  // x basis only
    bool correlation_matrix = false;  // x basis: per-pair <S^y_i S^y_j>
    std::string checkpoint_path;      // empty: no checkpointing
    bool resume = false;              // continue from checkpoint_path
};

/// Result of one SSE run: binned estimates keyed by observable name.
struct QMCReport {
    std::map<std::string, QMCEstimate> estimates;
    std::vector<QMCEstimate> syy;  // row-major N x N, when requested
    Representation representation = Representation::XBasis;
    long sweeps = 0;
    long thermalization = 0;
    int bins = 0;
    std::uint64_t seed = 0;
    long loop_aborts = 0;
    bool thermalization_flag = false;  // energy drifts between bin halves

    const QMCEstimate& at(const std::string& key) const {
        auto it = estimates.find(key);
        if (it == estimates.end())
            throw std::out_of_range("QMCReport: no observable " + key);
        return it->second;
    }
};

namespace detail {

// ---- binary checkpoint helpers ----

constexpr std::uint64_t kCkptMagic = 0x54464951'4d433031ULL;  // "TFIQMC01"
constexpr std::uint32_t kCkptVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
inline void put_str(std::ostream& os, const std::string& s) {
    put(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_str(std::istream& is) {
    std::uint32_t n = 0;
    get(is, n);
    std::string s(n, '\0');
    is.read(s.data(), n);
    return s;
}
template <class T>
void put_vec(std::ostream& os, const std::vector<T>& v) {
    put(os, static_cast<std::uint64_t>(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
void get_vec(std::istream& is, std::vector<T>& v) {
    std::uint64_t n = 0;
    get(is, n);
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(T)));
}

struct CheckpointState {
    std::uint8_t representation = 0;
    std::int32_t n_sites = 0;
    std::uint64_t seed = 0, stream = 0;
    std::int64_t next_sweep = 0;  // global sweep index (thermalization included)
    std::int64_t loop_aborts = 0;
    std::int64_t loops_per_sweep = 1;
    std::vector<int> ops;
    std::vector<std::int8_t> spins;
    std::map<std::string, BinSeries> series;
};

inline void save_checkpoint(const std::string& path, const CheckpointState& c) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write checkpoint " + tmp);
        put(os, kCkptMagic);
        put(os, kCkptVersion);
        put(os, c.representation);
        put(os, c.n_sites);
        put(os, c.seed);
        put(os, c.stream);
        put(os, c.next_sweep);
        put(os, c.loop_aborts);
        put(os, c.loops_per_sweep);
        put_vec(os, c.ops);
        put_vec(os, c.spins);
        put(os, static_cast<std::uint32_t>(c.series.size()));
        for (const auto& [name, bs] : c.series) {
            put_str(os, name);
            put(os, static_cast<std::int64_t>(bs.bin_size()));
            put_vec(os, bs.bins());
            put(os, bs.raw_sum());
            put(os, bs.raw_sq());
            put(os, static_cast<std::int64_t>(bs.raw_count()));
        }
        if (!os) throw std::runtime_error("short write on checkpoint " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move checkpoint into place: " + path);
}

inline CheckpointState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint " + path);
    std::uint64_t magic = 0;
    std::uint32_t version = 0;
    get(is, magic);
    get(is, version);
    if (magic != kCkptMagic || version != kCkptVersion)
        throw std::runtime_error("unrecognised checkpoint format: " + path);
    CheckpointState c;
    get(is, c.representation);
    get(is, c.n_sites);
    get(is, c.seed);
    get(is, c.stream);
    get(is, c.next_sweep);
    get(is, c.loop_aborts);
    get(is, c.loops_per_sweep);
    get_vec(is, c.ops);
    get_vec(is, c.spins);
    std::uint32_t nser = 0;
    get(is, nser);
    for (std::uint32_t k = 0; k < nser; ++k) {
        const std::string name = get_str(is);
        std::int64_t bin_size = 0, raw_n = 0;
        std::vector<double> bins;
        double raw_sum = 0, raw_sq = 0;
        get(is, bin_size);
        get_vec(is, bins);
        get(is, raw_sum);
        get(is, raw_sq);
        get(is, raw_n);
        BinSeries bs(bin_size);
        bs.restore(std::move(bins), raw_sum, raw_sq, raw_n);
        c.series.emplace(name, std::move(bs));
    }
    if (!is) throw std::runtime_error("truncated checkpoint " + path);
    return c;
}

}  // namespace detail

/// Run one SSE Markov chain and return binned estimates. The x-basis run
/// reports energy, <J^x>, Var(J^y) and Var(J^y_A) for the configured
/// subsystems; the z-basis run reports energy, <(J^z)^2> (= Var(J^z) since
/// <J^z> = 0 by symmetry) and the quantum variance QV(J^z).
inline QMCReport run_sse(const ModelSpec& spec, Representation rep,
                         const QmcOptions& opt) {
    if (opt.bins < 20)
        throw std::invalid_argument("run_sse: at least 20 bins required");
    if (opt.sweeps < opt.bins)
        throw std::invalid_argument("run_sse: fewer sweeps than bins");
    if (rep == Representation::ZBasis &&
        (!opt.subsystems.empty() || opt.correlation_matrix))
        throw std::invalid_argument(
            "run_sse: subsystem/correlation measurements need the x basis");
    const int n = spec.n_sites();
    for (const auto& g : opt.subsystems)
        for (int s : g.sites)
            if (s < 0 || s >= n)
                throw std::invalid_argument("run_sse: subsystem site outside lattice");

    const long bin_size = opt.sweeps / opt.bins;
    const long total = bin_size * opt.bins;  // truncate to whole bins
    const long first_measure = opt.thermalization;
    const long end_sweep = first_measure + total;

    // observable series; per-sweep scalars bin by sweep count, per-bin
    // ratio estimators (correlation counts) use bin size 1 "bin = bin"
    std::map<std::string, BinSeries> series;
    auto ensure = [&](const std::string& key, long bs) {
        series.emplace(key, BinSeries(bs));
    };
    ensure("energy", bin_size);
    if (rep == Representation::XBasis) {
        ensure("jx", bin_size);
        ensure("var_jy", 1);
        for (const auto& g : opt.subsystems) ensure("var_jy_" + g.label(), 1);
        if (opt.correlation_matrix)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    ensure("syy:" + std::to_string(i) + "," + std::to_string(j), 1);
    } else {
        ensure("var_jz", bin_size);
        ensure("qv_jz", bin_size);
    }

    std::optional<SseXEngine> xe;
    std::optional<SseZEngine> ze;
    if (rep == Representation::XBasis)
        xe.emplace(spec, opt.seed, opt.stream);
    else
        ze.emplace(spec, opt.seed, opt.stream);

    long sweep0 = 0;
    long aborts_prev = 0;
    if (opt.resume) {
        if (opt.checkpoint_path.empty())
            throw std::invalid_argument("run_sse: resume needs a checkpoint path");
        auto c = detail::load_checkpoint(opt.checkpoint_path);
        if (c.representation != static_cast<std::uint8_t>(rep) || c.n_sites != n ||
            c.seed != opt.seed || c.stream != opt.stream)
            throw std::runtime_error("run_sse: checkpoint does not match this run");
        for (const auto& [key, bs] : series) {
            auto it = c.series.find(key);
            if (it == c.series.end() || it->second.bin_size() != bs.bin_size())
                throw std::runtime_error("run_sse: checkpoint observables mismatch");
        }
        sweep0 = c.next_sweep;
        aborts_prev = c.loop_aborts;
        series = std::move(c.series);
        if (xe)
            xe->restore(std::move(c.ops), std::move(c.spins),
                        static_cast<std::uint64_t>(sweep0), 0, c.loops_per_sweep);
        else
            ze->restore(std::move(c.ops), std::move(c.spins),
                        static_cast<std::uint64_t>(sweep0), 0);
    }

    for (long s = sweep0; s < end_sweep; ++s) {
        const bool measuring = s >= first_measure;
        if (xe) {
            xe->set_sweep_index(static_cast<std::uint64_t>(s));
            xe->sweep(!measuring, measuring);
        } else {
            ze->set_sweep_index(static_cast<std::uint64_t>(s));
            ze->sweep(!measuring);
        }
        if (!measuring) continue;

        if (xe) {
            const auto m = xe->measure();
            series.at("energy").add(m.energy);
            series.at("jx").add(m.jx);
        } else {
            const auto m = ze->measure();
            series.at("energy").add(m.energy);
            series.at("var_jz").add(m.jz_sq);  // <J^z> = 0 by spin-flip symmetry
            series.at("qv_jz").add(m.qv_jz);
        }

        const long done = s - first_measure + 1;
        if (done % bin_size != 0) continue;

        if (xe) {
            // ratio estimator per bin: the diagonal contact counts supply
            // the common normalization, on-site <(S^y)^2> = 1/4 being exact
            const auto& c = xe->correlation_counts();
            double kappa = 0;
            for (int i = 0; i < n; ++i) kappa += c[static_cast<long>(i) * n + i];
            kappa /= n;
            if (kappa <= 0)
                throw std::runtime_error("run_sse: no loop contacts in a bin");
            const double f = 0.25 / kappa;
            double var = 0;
            for (double x : c) var += x;
            series.at("var_jy").add(f * var);
            for (const auto& g : opt.subsystems) {
                double va = 0;
                for (int i : g.sites)
                    for (int j : g.sites) va += c[static_cast<long>(i) * n + j];
                series.at("var_jy_" + g.label()).add(f * va);
            }
            if (opt.correlation_matrix)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        series
                            .at("syy:" + std::to_string(i) + "," + std::to_string(j))
                            .add(f * c[static_cast<long>(i) * n + j]);
            xe->reset_correlation_counts();
        }

        if (!opt.checkpoint_path.empty()) {
            detail::CheckpointState c;
            c.representation = static_cast<std::uint8_t>(rep);
            c.n_sites = n;
            c.seed = opt.seed;
            c.stream = opt.stream;
            c.next_sweep = s + 1;
            c.loop_aborts = aborts_prev + (xe ? xe->loop_aborts() : 0);
            c.loops_per_sweep = xe ? xe->loops_per_sweep() : 1;
            c.ops = xe ? xe->operators() : ze->operators();
            c.spins = xe ? xe->state() : ze->state();
            c.series = series;
            detail::save_checkpoint(opt.checkpoint_path, c);
        }
    }

    QMCReport out;
    out.representation = rep;
    out.sweeps = total;
    out.thermalization = opt.thermalization;
    out.bins = opt.bins;
    out.seed = opt.seed;
    out.loop_aborts = aborts_prev + (xe ? xe->loop_aborts() : 0);
    if (opt.correlation_matrix)
        out.syy.resize(static_cast<std::size_t>(n) * n);
    for (const auto& [key, bs] : series) {
        if (key.rfind("syy:", 0) == 0) {
            const auto comma = key.find(',');
            const int i = std::stoi(key.substr(4, comma - 4));
            const int j = std::stoi(key.substr(comma + 1));
            out.syy[static_cast<std::size_t>(i) * n + j] = bs.estimate();
        } else {
            out.estimates.emplace(key, bs.estimate());
        }
    }

    // thermalization drift test: the two halves of the energy bin series
    // must agree within three combined standard errors
    {
        const auto& eb = series.at("energy").bins();
        const int m = static_cast<int>(eb.size());
        std::vector<double> h1(eb.begin(), eb.begin() + m / 2);
        std::vector<double> h2(eb.begin() + m / 2, eb.end());
        double m1 = 0, m2 = 0;
        for (double x : h1) m1 += x;
        for (double x : h2) m2 += x;
        m1 /= h1.size();
        m2 /= h2.size();
        const double se1 = detail::bin_std_error(h1), se2 = detail::bin_std_error(h2);
        const double comb = std::sqrt(se1 * se1 + se2 * se2);
        out.thermalization_flag = std::abs(m1 - m2) > 3.0 * comb + 1e-300;
    }
    return out;
}

/// Convenience overload with the default subsystem-free configuration.
inline QMCReport run_sse(const ModelSpec& spec, Representation rep, long sweeps,
                         long thermalization, int bins, std::uint64_t seed) {
    QmcOptions opt;
    opt.sweeps = sweeps;
    opt.thermalization = thermalization;
    opt.bins = bins;
    opt.seed = seed;
    return run_sse(spec, rep, opt);
}

}  // namespace tfim
