#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfim/model.hpp"
#include "tfim/rng.hpp"

namespace tfim {

/// Stochastic series expansion sampler in the field-diagonal (x) basis.
/// After rotating the quantization axis onto the field, the Hamiltonian reads
/// -J sum_b S^x_i S^x_j - Gamma sum_i S^z_i in the new basis; the field is
/// folded into the bond diagonal weights so every operator is a four-leg bond
/// vertex. Off-diagonal vertices flip both spins (weight J/4). Configurations
/// are updated by directed loops whose exit probabilities solve the
/// directed-loop equations with minimal bounce weight.
///
/// During loop construction the head's crossings of the tail's propagation
/// level accumulate the equal-time transverse correlation matrix: crossings
/// where head and tail carry opposite ladder operators count +1, equal ones
/// -1, which combines the four channels into <S^y_i S^y_j> after dividing by
/// the exactly known on-site value 1/4.
class SseXEngine {
  public:
    static constexpr int kIdentity = -1;
    static constexpr long kLoopCap = 1000000;  // visited legs per loop

    SseXEngine(int n_sites, std::vector<std::pair<int, int>> bonds, double coupling_j,
               double gamma, double beta, std::uint64_t seed, std::uint64_t stream = 0)
        : n_(n_sites),
          bonds_(std::move(bonds)),
          j_(coupling_j),
          gamma_(gamma),
          beta_(beta),
          rng_(seed, stream) {
        if (n_ < 1 || beta_ <= 0 || j_ < 0 || gamma_ < 0 || bonds_.empty())
            throw std::invalid_argument("SseXEngine: invalid parameters");
        build_tables();
        state_.assign(n_, +1);
        for (int i = 0; i < n_; ++i)
            if (rng_.bernoulli(0.5)) state_[i] = -1;
        ops_.assign(20, kIdentity);
        acc_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    }

    SseXEngine(const ModelSpec& spec, std::uint64_t seed, std::uint64_t stream = 0)
        : SseXEngine(spec.n_sites(), lattice_bonds(spec), spec.coupling_j, spec.gamma(),
                     spec.beta(), seed, stream) {
        if (spec.dimension != 2 && spec.dimension != 3)
            throw std::invalid_argument("SseXEngine: dimension must be 2 or 3");
        if (spec.boundary != Boundary::Periodic)
            throw std::invalid_argument("SseXEngine: periodic boundaries required");
        if (spec.temperature <= 0)
            throw std::invalid_argument("SseXEngine: T > 0 required");
    }

    void set_sweep_index(std::uint64_t s) { rng_.set_sweep(s); }

    void sweep(bool grow_cutoff, bool measure_correlations = false) {
        diagonal_update();
        build_links();
        run_loops(measure_correlations);
        if (grow_cutoff) {
            if (4 * expansion_order_ > 3 * cutoff())
                set_cutoff(expansion_order_ + expansion_order_ / 4 + 4);
            adapt_loop_count();
        }
    }

    double energy_offset() const { return offset_; }

    struct Sample {
        double energy = 0.0;
        double jx = 0.0;  // <J^x>, slot-averaged
    };

    // diagnostic: off-diagonal vertex count per bond
    std::vector<long> offdiag_counts() const {
        std::vector<long> c(bonds_.size(), 0);
        for (int op : ops_)
            if (op != kIdentity && (op & 1)) ++c[op >> 1];
        return c;
    }

    Sample measure() const {
        Sample s;
        s.energy = offset_ - expansion_order_ / beta_;
        int m2 = 0;
        for (int i = 0; i < n_; ++i) m2 += state_[i];
        if (expansion_order_ == 0) {
            s.jx = 0.5 * m2;
            return s;
        }
        std::vector<std::int8_t> prop = state_;
        double sum = 0;
        for (int op : ops_) {
            if (op == kIdentity) continue;
            if (op & 1) {
                const auto& b = bonds_[op >> 1];
                m2 -= 2 * (prop[b.first] + prop[b.second]);
                prop[b.first] = -prop[b.first];
                prop[b.second] = -prop[b.second];
            }
            sum += 0.5 * m2;
        }
        s.jx = sum / expansion_order_;
        return s;
    }

    /// Signed crossing counts; entry (i, j) estimates a common constant times
    /// 4 <S^y_i S^y_j>, the constant being the diagonal average.
    const std::vector<double>& correlation_counts() const { return acc_; }
    void reset_correlation_counts() { acc_.assign(acc_.size(), 0.0); }

    long loop_aborts() const { return loop_aborts_; }

    int n_sites() const { return n_; }
    long expansion_order() const { return expansion_order_; }
    long cutoff() const { return static_cast<long>(ops_.size()); }
    double beta() const { return beta_; }
    const std::vector<int>& operators() const { return ops_; }
    const std::vector<std::int8_t>& state() const { return state_; }
    const CounterRng& rng() const { return rng_; }
    long loops_per_sweep() const { return loops_per_sweep_; }

    void restore(std::vector<int> ops, std::vector<std::int8_t> state,
                 std::uint64_t rng_sweep, std::uint64_t rng_draw, long loops_per_sweep) {
        if (static_cast<int>(state.size()) != n_)
            throw std::invalid_argument("SseXEngine::restore: state size mismatch");
        ops_ = std::move(ops);
        state_ = std::move(state);
        expansion_order_ = 0;
        for (int op : ops_)
            if (op != kIdentity) ++expansion_order_;
        loops_per_sweep_ = loops_per_sweep;
        rng_.restore(rng_sweep, rng_draw);
    }

  private:
    // ---- vertex weights and exit-probability tables ----

    double fi_of(int b) const { return 0.5 * gamma_ / coordination_[bonds_[b].first]; }
    double fj_of(int b) const { return 0.5 * gamma_ / coordination_[bonds_[b].second]; }

    static int sgn(int bit) { return bit ? +1 : -1; }

    double vertex_weight(int cfg, double fi, double fj, double cb) const {
        const int s0 = sgn(cfg & 1), s1 = sgn(cfg & 2), s2 = sgn(cfg & 4),
                  s3 = sgn(cfg & 8);
        if (s2 == s0 && s3 == s1) return cb + fi * s0 + fj * s1;
        if (s2 == -s0 && s3 == -s1) return 0.25 * j_;
        return 0.0;
    }

    void build_tables() {
        coordination_.assign(n_, 0);
        for (const auto& b : bonds_) {
            if (b.first < 0 || b.first >= n_ || b.second < 0 || b.second >= n_ ||
                b.first == b.second)
                throw std::invalid_argument("SseXEngine: malformed bond");
            ++coordination_[b.first];
            ++coordination_[b.second];
        }
        std::map<std::pair<int, int>, int> classes;
        bond_class_.resize(bonds_.size());
        bond_const_.resize(bonds_.size());
        offset_ = 0;
        for (std::size_t b = 0; b < bonds_.size(); ++b) {
            const std::pair<int, int> key{coordination_[bonds_[b].first],
                                          coordination_[bonds_[b].second]};
            auto [it, inserted] = classes.emplace(key, static_cast<int>(classes.size()));
            bond_class_[b] = it->second;
            bond_const_[b] = 0.25 * j_ + fi_of(static_cast<int>(b)) +
                             fj_of(static_cast<int>(b));
            offset_ += bond_const_[b];
            if (inserted) {
                tables_.emplace_back();
                build_class_table(tables_.back(), fi_of(static_cast<int>(b)),
                                  fj_of(static_cast<int>(b)), bond_const_[b]);
            }
        }
    }

    // cumulative exit probabilities, indexed [config][entrance][exit]
    using ClassTable = std::array<std::array<std::array<double, 4>, 4>, 16>;

    void build_class_table(ClassTable& table, double fi, double fj, double cb) const {
        for (auto& per_cfg : table)
            for (auto& row : per_cfg) row = {0, 0, 0, 0};
        // one directed-loop equation set per half-flipped state h; member x of
        // the set is the configuration h with leg x flipped
        for (int h = 0; h < 16; ++h) {
            std::array<double, 4> w;
            for (int x = 0; x < 4; ++x) w[x] = vertex_weight(h ^ (1 << x), fi, fj, cb);
            std::array<std::array<double, 4>, 4> a{};
            solve_minimal_bounce(w, a);
            for (int e = 0; e < 4; ++e) {
                if (w[e] <= 0) continue;
                const int cfg = h ^ (1 << e);
                double cum = 0;
                for (int x = 0; x < 4; ++x) {
                    cum += a[e][x] / w[e];
                    table[cfg][e][x] = cum;
                }
            }
        }
    }

    /// Symmetric a-matrix with prescribed row sums and minimal diagonal
    /// (bounce) weight; detailed balance W_e P(e->x) = W_x P(x->e) follows
    /// from the symmetry of a.
    static void solve_minimal_bounce(const std::array<double, 4>& w,
                                     std::array<std::array<double, 4>, 4>& a) {
        std::array<int, 4> idx{0, 1, 2, 3};
        for (int i = 0; i < 4; ++i)  // insertion sort, descending
            for (int k = i; k > 0 && w[idx[k]] > w[idx[k - 1]]; --k)
                std::swap(idx[k], idx[k - 1]);
        const int A = idx[0], B = idx[1], C = idx[2], D = idx[3];
        const double rest = w[B] + w[C] + w[D];
        if (w[A] >= rest) {  // dominant weight must bounce
            a[A][A] = w[A] - rest;
            for (int k = 1; k < 4; ++k) {
                a[A][idx[k]] = w[idx[k]];
                a[idx[k]][A] = w[idx[k]];
            }
            return;
        }
        // bounce-free: pair the two largest, lump the rest
        const double wc = w[C] + w[D];
        const double ab = 0.5 * (w[A] + w[B] - wc);
        const double ac = 0.5 * (w[A] + wc - w[B]);
        const double bc = 0.5 * (w[B] + wc - w[A]);
        a[A][B] = a[B][A] = ab;
        if (wc > 0) {
            a[A][C] = a[C][A] = ac * w[C] / wc;
            a[A][D] = a[D][A] = ac * w[D] / wc;
            a[B][C] = a[C][B] = bc * w[C] / wc;
            a[B][D] = a[D][B] = bc * w[D] / wc;
        }
    }

    // ---- sweep machinery ----

    void diagonal_update() {
        const long nb = static_cast<long>(bonds_.size());
        std::vector<std::int8_t>& s = scratch_state_;
        s = state_;
        const long cut = cutoff();
        for (long p = 0; p < cut; ++p) {
            int& op = ops_[p];
            if (op == kIdentity) {
                const int b = static_cast<int>(rng_.uniform_below(nb));
                const double w = diag_weight(b, s);
                if (w <= 0) continue;
                const double p_acc = beta_ * nb * w / (cut - expansion_order_);
                if (p_acc >= 1.0 || rng_.uniform() < p_acc) {
                    op = 2 * b;
                    ++expansion_order_;
                }
            } else if ((op & 1) == 0) {
                const double w = diag_weight(op >> 1, s);
                const double p_acc = (cut - expansion_order_ + 1) / (beta_ * nb * w);
                if (p_acc >= 1.0 || rng_.uniform() < p_acc) {
                    op = kIdentity;
                    --expansion_order_;
                }
            } else {
                const auto& bd = bonds_[op >> 1];
                s[bd.first] = -s[bd.first];
                s[bd.second] = -s[bd.second];
            }
        }
    }

    double diag_weight(int b, const std::vector<std::int8_t>& s) const {
        return bond_const_[b] + fi_of(b) * s[bonds_[b].first] +
               fj_of(b) * s[bonds_[b].second];
    }

    int leg_site(long leg) const {
        const auto& b = bonds_[vertex_bond_[leg / 4]];
        return (leg % 2 == 0) ? b.first : b.second;
    }

    void build_links() {
        const long nv = expansion_order_;
        vertex_bond_.clear();
        vertex_bond_.reserve(nv);
        legspin_.assign(4 * nv, 0);
        links_.assign(4 * nv, -1);
        first_leg_.assign(n_, -1);
        last_leg_.assign(n_, -1);
        site_in_legs_.resize(n_);
        for (auto& sl : site_in_legs_) sl.clear();
        std::vector<std::int8_t>& s = scratch_state_;
        s = state_;
        long v = 0;
        for (int op : ops_) {
            if (op == kIdentity) continue;
            const int b = op >> 1;
            const bool flip = op & 1;
            const auto& bd = bonds_[b];
            vertex_bond_.push_back(b);
            legspin_[4 * v + 0] = s[bd.first];
            legspin_[4 * v + 1] = s[bd.second];
            if (flip) {
                s[bd.first] = -s[bd.first];
                s[bd.second] = -s[bd.second];
            }
            legspin_[4 * v + 2] = s[bd.first];
            legspin_[4 * v + 3] = s[bd.second];
            const int sites[2] = {bd.first, bd.second};
            for (int k = 0; k < 2; ++k) {
                const long in = 4 * v + k, out = 4 * v + 2 + k;
                site_in_legs_[sites[k]].push_back(in);
                if (last_leg_[sites[k]] >= 0) {
                    links_[last_leg_[sites[k]]] = in;
                    links_[in] = last_leg_[sites[k]];
                } else {
                    first_leg_[sites[k]] = in;
                }
                last_leg_[sites[k]] = out;
            }
            ++v;
        }
        for (int i = 0; i < n_; ++i) {
            if (first_leg_[i] >= 0) {
                links_[last_leg_[i]] = first_leg_[i];
                links_[first_leg_[i]] = last_leg_[i];
            }
        }
    }

    static bool crosses(long line, long from, long to) {
        if (from == to) return true;  // full wrap
        if (from < to) return line >= from && line < to;
        return line >= from || line < to;
    }

    void run_loops(bool measuring) {
        const long nv = expansion_order_;
        if (nv == 0) {
            // bare worldlines: every loop is an immediate pair annihilation
            // contributing the on-site contact count
            if (measuring)
                for (long loop = 0; loop < loops_per_sweep_; ++loop) {
                    const long i = static_cast<long>(rng_.uniform_below(n_));
                    acc_[i * n_ + i] += 1.0;
                }
            for (int i = 0; i < n_; ++i)
                if (rng_.bernoulli(0.5)) state_[i] = -state_[i];
            return;
        }
        long flipped_total = 0;
        for (long loop = 0; loop < loops_per_sweep_; ++loop)
            flipped_total += run_one_loop(measuring);
        flipped_ema_ = 0.9 * flipped_ema_ +
                       0.1 * (static_cast<double>(flipped_total) /
                              static_cast<double>(loops_per_sweep_));
        // write vertex types and the slot-0 state back
        long v = 0;
        for (int& op : ops_) {
            if (op == kIdentity) continue;
            op = 2 * vertex_bond_[v] +
                 (legspin_[4 * v] != legspin_[4 * v + 2] ? 1 : 0);
            ++v;
        }
        for (int i = 0; i < n_; ++i) {
            if (first_leg_[i] >= 0)
                state_[i] = legspin_[first_leg_[i]];
            else if (rng_.bernoulli(0.5))
                state_[i] = -state_[i];
        }
    }

    void commit_counts() {
        for (const auto& [idx, val] : pending_) acc_[idx] += val;
    }

    // returns the number of flipped legs
    long run_one_loop(bool measuring) {
        const long nv = expansion_order_;
        // create the head/tail pair at a uniformly random (site, propagation
        // level); placing the tail only at vertex legs would over-represent
        // short worldline segments and bias the crossing counts
        const int tail_site = static_cast<int>(rng_.uniform_below(n_));
        const long tail_line = static_cast<long>(rng_.uniform_below(nv));
        const bool start_up = rng_.bernoulli(0.5);
        const auto& in_legs = site_in_legs_[tail_site];
        if (in_legs.empty()) {  // bare worldline: immediate annihilation
            if (measuring) {
                const long idx = static_cast<long>(tail_site) * n_ + tail_site;
                acc_[idx] += 1.0;
            }
            return 0;
        }
        // segment holding the tail: bounded above by the first vertex on this
        // site past tail_line, below by its predecessor (cyclically)
        auto it = std::lower_bound(in_legs.begin(), in_legs.end(), 4 * (tail_line + 1));
        const long top_in = (it == in_legs.end()) ? in_legs.front() : *it;
        const long bot_in = (it == in_legs.begin()) ? in_legs.back() : *(it - 1);
        const bool tail_plus = start_up ? legspin_[top_in] < 0 : legspin_[top_in] > 0;

        flip_log_.clear();
        pending_.clear();
        long leg = start_up ? top_in : bot_in + 2;
        long flipped = 0;
        for (long visits = 0; visits < kLoopCap; ++visits) {
            const long v = leg / 4;
            const int e = static_cast<int>(leg % 4);
            const int cfg = (legspin_[4 * v] > 0 ? 1 : 0) |
                            (legspin_[4 * v + 1] > 0 ? 2 : 0) |
                            (legspin_[4 * v + 2] > 0 ? 4 : 0) |
                            (legspin_[4 * v + 3] > 0 ? 8 : 0);
            const auto& row = tables_[bond_class_[vertex_bond_[v]]][cfg][e];
            const double u = rng_.uniform();
            int x = 0;
            while (x < 3 && u >= row[x]) ++x;
            if (x != e) {
                legspin_[4 * v + e] = -legspin_[4 * v + e];
                legspin_[4 * v + x] = -legspin_[4 * v + x];
                flip_log_.push_back(4 * v + e);
                flip_log_.push_back(4 * v + x);
                flipped += 2;
            }
            const long exit_leg = 4 * v + x;
            const long next = links_[exit_leg];
            // the head now traverses the worldline segment between exit_leg
            // and next; test whether that passage covers the tail's level
            const bool up = x >= 2;
            const long pa = v, pb = next / 4;
            const bool hit =
                up ? crosses(tail_line, pa, pb) : crosses(tail_line, pb, pa);
            if (hit) {
                if (leg_site(exit_leg) == tail_site) {
                    // head meets the tail: annihilate, counting the contact
                    if (measuring)
                        pending_.emplace_back(
                            static_cast<long>(tail_site) * n_ + tail_site, 1.0);
                    commit_counts();
                    return flipped;
                }
                if (measuring) {
                    // pre-passage segment spin is the negated (already
                    // flipped) exit value
                    const int pre = -legspin_[exit_leg];
                    const bool head_plus = up ? pre > 0 : pre < 0;
                    pending_.emplace_back(
                        static_cast<long>(tail_site) * n_ + leg_site(exit_leg),
                        head_plus != tail_plus ? 1.0 : -1.0);
                }
            }
            leg = next;
        }
        // cap exceeded: undo and discard this loop's measurements
        ++loop_aborts_;
        for (long lg : flip_log_) legspin_[lg] = -legspin_[lg];
        return 0;
    }

    void adapt_loop_count() {
        if (flipped_ema_ < 2.0) flipped_ema_ = 2.0;
        const double target = 2.0 * static_cast<double>(expansion_order_);
        long want = static_cast<long>(target / flipped_ema_ + 0.5);
        if (want < 1) want = 1;
        const long cap = 2 * expansion_order_ + 10;
        loops_per_sweep_ = want > cap ? cap : want;
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

    std::vector<int> coordination_;
    std::vector<int> bond_class_;
    std::vector<double> bond_const_;
    std::vector<ClassTable> tables_;
    double offset_ = 0;

    long loops_per_sweep_ = 1;
    double flipped_ema_ = 2.0;
    long loop_aborts_ = 0;

    std::vector<double> acc_;

    // scratch
    std::vector<std::int8_t> scratch_state_;
    std::vector<int> vertex_bond_;
    std::vector<std::int8_t> legspin_;
    std::vector<long> links_;
    std::vector<long> first_leg_, last_leg_;
    std::vector<std::vector<long>> site_in_legs_;
    std::vector<long> flip_log_;
    std::vector<std::pair<long, double>> pending_;
};

}  // namespace tfim
