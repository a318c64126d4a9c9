#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfim/model.hpp"
#include "tfim/rng.hpp"

namespace tfim {

namespace detail {

/// Union-find over integer ids, path halving.
class DisjointSets {
  public:
    explicit DisjointSets(int n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b] = a;
    }

  private:
    std::vector<int> parent_;
};

}  // namespace detail

/// Stochastic series expansion sampler in the Ising-diagonal (z) basis.
/// Operator slots hold site constants (weight Gamma/2), site spin flips
/// (weight Gamma/2) and bond diagonals (weight J/2 on aligned spins). Cluster
/// updates join worldline segments through bond vertices and flip them with
/// probability 1/2, toggling boundary site operators between the constant and
/// flip types.
class SseZEngine {
  public:
    static constexpr int kIdentity = -1;

    SseZEngine(int n_sites, std::vector<std::pair<int, int>> bonds, double coupling_j,
               double gamma, double beta, std::uint64_t seed, std::uint64_t stream = 0)
        : n_(n_sites),
          bonds_(std::move(bonds)),
          j_(coupling_j),
          gamma_(gamma),
          beta_(beta),
          rng_(seed, stream) {
        if (n_ < 1 || beta_ <= 0 || j_ < 0 || gamma_ < 0)
            throw std::invalid_argument("SseZEngine: invalid parameters");
        state_.assign(n_, +1);
        for (int i = 0; i < n_; ++i)
            if (rng_.bernoulli(0.5)) state_[i] = -1;
        ops_.assign(20, kIdentity);
    }

    SseZEngine(const ModelSpec& spec, std::uint64_t seed, std::uint64_t stream = 0)
        : SseZEngine(spec.n_sites(), lattice_bonds(spec), spec.coupling_j, spec.gamma(),
                     spec.beta(), seed, stream) {
        if (spec.dimension != 2 && spec.dimension != 3)
            throw std::invalid_argument("SseZEngine: dimension must be 2 or 3");
        if (spec.boundary != Boundary::Periodic)
            throw std::invalid_argument("SseZEngine: periodic boundaries required");
        if (spec.temperature <= 0)
            throw std::invalid_argument("SseZEngine: T > 0 required");
    }

    void set_sweep_index(std::uint64_t s) { rng_.set_sweep(s); }

    void sweep(bool grow_cutoff) {
        diagonal_update();
        cluster_update();
        if (grow_cutoff && 4 * expansion_order_ > 3 * cutoff())
            set_cutoff(expansion_order_ + expansion_order_ / 4 + 4);
    }

    /// Constant shift added to -H so all vertex weights are nonnegative.
    double energy_offset() const {
        return 0.5 * gamma_ * n_ + 0.25 * j_ * static_cast<double>(bonds_.size());
    }

    struct Sample {
        double energy = 0.0;
        double jz_sq = 0.0;  // <(J^z)^2>
        double qv_jz = 0.0;
    };

    /// Diagonal estimators from the current configuration: the equal-time
    /// moment averages (J^z)^2 over propagated states and the integrated
    /// imaginary-time correlator uses the slot-pair identity
    /// chi/beta = [ (sum_p O_p)^2 + sum_p O_p^2 ] / (n(n+1)).
    Sample measure() const {
        Sample s;
        s.energy = energy_offset() - expansion_order_ / beta_;
        int m2 = 0;  // 2 J^z
        for (int i = 0; i < n_; ++i) m2 += state_[i];
        if (expansion_order_ == 0) {
            const double o = 0.5 * m2;
            s.jz_sq = o * o;
            s.qv_jz = 0.0;
            return s;
        }
        std::vector<std::int8_t> prop = state_;
        double sum1 = 0, sum2 = 0;
        for (int op : ops_) {
            if (op == kIdentity) continue;
            if (op >= n_ && op < 2 * n_) {
                const int site = op - n_;
                m2 -= 2 * prop[site];
                prop[site] = -prop[site];
            }
            const double o = 0.5 * m2;
            sum1 += o;
            sum2 += o * o;
        }
        const double n = expansion_order_;
        const double chi_over_beta = (sum1 * sum1 + sum2) / (n * (n + 1));
        s.jz_sq = sum2 / n;
        s.qv_jz = s.jz_sq - chi_over_beta;
        return s;
    }

    int n_sites() const { return n_; }
    long expansion_order() const { return expansion_order_; }
    long cutoff() const { return static_cast<long>(ops_.size()); }
    double beta() const { return beta_; }
    const std::vector<int>& operators() const { return ops_; }
    const std::vector<std::int8_t>& state() const { return state_; }
    const CounterRng& rng() const { return rng_; }

    /// Checkpoint restore: replaces the full Markov state.
    void restore(std::vector<int> ops, std::vector<std::int8_t> state,
                 std::uint64_t rng_sweep, std::uint64_t rng_draw) {
        if (static_cast<int>(state.size()) != n_)
            throw std::invalid_argument("SseZEngine::restore: state size mismatch");
        ops_ = std::move(ops);
        state_ = std::move(state);
        expansion_order_ = 0;
        for (int op : ops_)
            if (op != kIdentity) ++expansion_order_;
        rng_.restore(rng_sweep, rng_draw);
    }

  private:
    void diagonal_update() {
        const long cand = n_ + static_cast<long>(bonds_.size());
        const double wsite = 0.5 * gamma_;
        const double wbond = 0.5 * j_;
        std::vector<std::int8_t>& s = scratch_state_;
        s = state_;
        const long cut = cutoff();
        for (long p = 0; p < cut; ++p) {
            int& op = ops_[p];
            if (op == kIdentity) {
                const long r = static_cast<long>(rng_.uniform_below(cand));
                double w;
                int candidate;
                if (r < n_) {
                    w = wsite;
                    candidate = static_cast<int>(r);
                } else {
                    const auto& b = bonds_[r - n_];
                    if (s[b.first] != s[b.second]) continue;  // weight zero
                    w = wbond;
                    candidate = 2 * n_ + static_cast<int>(r - n_);
                }
                if (w <= 0) continue;
                const double p_acc = beta_ * cand * w / (cut - expansion_order_);
                if (p_acc >= 1.0 || rng_.uniform() < p_acc) {
                    op = candidate;
                    ++expansion_order_;
                }
            } else if (op < n_ || op >= 2 * n_) {  // diagonal: removable
                const double w = op < n_ ? wsite : wbond;
                const double p_acc = (cut - expansion_order_ + 1) / (beta_ * cand * w);
                if (p_acc >= 1.0 || rng_.uniform() < p_acc) {
                    op = kIdentity;
                    --expansion_order_;
                }
            } else {  // spin flip: propagate
                s[op - n_] = -s[op - n_];
            }
        }
    }

    void cluster_update() {
        // per-site slot lists of site operators; bond operators unite the two
        // host segments
        site_slots_.assign(n_, {});
        const long cut = cutoff();
        for (long p = 0; p < cut; ++p) {
            const int op = ops_[p];
            if (op == kIdentity || op >= 2 * n_) continue;
            site_slots_[op < n_ ? op : op - n_].push_back(p);
        }
        seg_offset_.assign(n_ + 1, 0);
        for (int i = 0; i < n_; ++i)
            seg_offset_[i + 1] =
                seg_offset_[i] + std::max<std::size_t>(site_slots_[i].size(), 1);
        const int n_seg = seg_offset_[n_];
        detail::DisjointSets sets(n_seg);
        for (long p = 0; p < cut; ++p) {
            const int op = ops_[p];
            if (op < 2 * n_) continue;
            const auto& b = bonds_[op - 2 * n_];
            sets.unite(segment_at(b.first, p), segment_at(b.second, p));
        }
        flip_.assign(n_seg, 0);
        std::vector<std::int8_t> root_flip(n_seg, -1);
        for (int sgm = 0; sgm < n_seg; ++sgm) {
            const int r = sets.find(sgm);
            if (root_flip[r] < 0) root_flip[r] = rng_.bernoulli(0.5) ? 1 : 0;
            flip_[sgm] = root_flip[r];
        }
        for (int i = 0; i < n_; ++i) {
            const auto& slots = site_slots_[i];
            const int m = static_cast<int>(slots.size());
            const int base = seg_offset_[i];
            // segment k starts at site operator k; the wrap segment (m-1)
            // covers propagation position 0
            if (m == 0) {
                if (flip_[base]) state_[i] = -state_[i];
                continue;
            }
            if (flip_[base + m - 1]) state_[i] = -state_[i];
            for (int k = 0; k < m; ++k) {
                const int below = base + (k + m - 1) % m;
                const int above = base + k;
                if (flip_[below] != flip_[above]) {
                    int& op = ops_[slots[k]];
                    op = op < n_ ? op + n_ : op - n_;  // toggle const <-> flip
                }
            }
        }
    }

    int segment_at(int site, long slot) const {
        const auto& slots = site_slots_[site];
        const int m = static_cast<int>(slots.size());
        if (m == 0) return seg_offset_[site];
        // segment index = position of the last site operator below `slot`
        const auto it = std::upper_bound(slots.begin(), slots.end(), slot);
        const int k = static_cast<int>(it - slots.begin());
        return seg_offset_[site] + (k + m - 1) % m;
    }

    void set_cutoff(long cut) {
        if (cut > static_cast<long>(ops_.size())) ops_.resize(cut, kIdentity);
    }

    int n_;
    std::vector<std::pair<int, int>> bonds_;
    double j_, gamma_, beta_;
    CounterRng rng_;
    std::vector<std::int8_t> state_;
    std::vector<int> ops_;
    long expansion_order_ = 0;

    // scratch
    std::vector<std::int8_t> scratch_state_;
    std::vector<std::vector<long>> site_slots_;
    std::vector<int> seg_offset_;
    std::vector<std::int8_t> flip_;
};

}  // namespace tfim
