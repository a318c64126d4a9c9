// Exact thermal observables for the periodic L x L transverse-field Ising
// model via translation-symmetry block diagonalization. The full 2^N dense
// problem is out of reach at N = 16 (dimension 65536), but each of the 16
// momentum sectors is ~4096-dimensional and fits comfortably. Conjugate
// momenta (k, -k) share all traces, so only one of each pair is solved.
//
// Usage: lattice_ed_reference L g betaJ [g betaJ ...]
//
// Reports <H>, <J^x>, Var(J^y), Var(J^z) and QV(J^z), the latter via the
// spectral representation of the imaginary-time averaged correlator
//   (1/beta) int_0^beta <J^z(tau) J^z(0)> dtau
//     = (1/Z) sum_{mn} |<m|J^z|n>|^2 (e^{-beta E_n} - e^{-beta E_m})
//                                     / (beta (E_m - E_n)).

#include <complex>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <vector>

#define lapack_complex_double std::complex<double>
#include <cblas.h>
#include <lapacke.h>

using cplx = std::complex<double>;

namespace {

int L;           // linear size
int N;           // sites
int NSTATES;     // 2^N
const double J = 1.0;

int site(int x, int y) { return ((x % L + L) % L) + L * ((y % L + L) % L); }

// apply translation by (tx, ty) to a basis state
int translate(int s, int tx, int ty) {
    int r = 0;
    for (int y = 0; y < L; ++y)
        for (int x = 0; x < L; ++x)
            if (s >> site(x, y) & 1) r |= 1 << site(x + tx, y + ty);
    return r;
}

struct OrbitInfo {
    std::vector<int> rep_of;     // orbit representative per state
    std::vector<int> tx_of;      // translation taking the representative
    std::vector<int> ty_of;      //   to this state
    std::vector<std::vector<std::pair<int, int>>> stab;  // per rep: stabilizer
    std::vector<int> reps;
    std::vector<int> rep_index;  // state -> index in reps (reps only)
};

OrbitInfo build_orbits() {
    OrbitInfo o;
    o.rep_of.assign(NSTATES, -1);
    o.tx_of.assign(NSTATES, 0);
    o.ty_of.assign(NSTATES, 0);
    o.rep_index.assign(NSTATES, -1);
    for (int s = 0; s < NSTATES; ++s) {
        if (o.rep_of[s] >= 0) continue;
        o.rep_index[s] = static_cast<int>(o.reps.size());
        o.reps.push_back(s);
        o.stab.emplace_back();
        for (int ty = 0; ty < L; ++ty)
            for (int tx = 0; tx < L; ++tx) {
                const int t = translate(s, tx, ty);
                if (t == s) o.stab.back().emplace_back(tx, ty);
                if (o.rep_of[t] < 0) {
                    o.rep_of[t] = s;
                    o.tx_of[t] = tx;
                    o.ty_of[t] = ty;
                }
            }
    }
    return o;
}

struct Sector {
    std::vector<int> basis;      // representatives valid in this sector
    std::vector<double> norm;    // stabilizer size per basis state
    std::vector<int> pos;        // rep state -> position in basis (-1 outside)
};

Sector build_sector(const OrbitInfo& o, int kx, int ky) {
    Sector sec;
    sec.pos.assign(NSTATES, -1);
    for (std::size_t r = 0; r < o.reps.size(); ++r) {
        bool ok = true;
        for (auto [tx, ty] : o.stab[r])
            if ((kx * tx + ky * ty) % L != 0) { ok = false; break; }
        if (!ok) continue;
        sec.pos[o.reps[r]] = static_cast<int>(sec.basis.size());
        sec.basis.push_back(o.reps[r]);
        sec.norm.push_back(static_cast<double>(o.stab[r].size()));
    }
    return sec;
}

double ising_energy(int s, const std::vector<std::pair<int, int>>& bonds) {
    double e = 0;
    for (auto [a, b] : bonds) {
        const int sa = (s >> a & 1) ? 1 : -1, sb = (s >> b & 1) ? 1 : -1;
        e += -J * 0.25 * sa * sb;
    }
    return e;
}

double jz_of(int s) {
    double m = 0;
    for (int i = 0; i < N; ++i) m += (s >> i & 1) ? 0.5 : -0.5;
    return m;
}

// phase and target index of a single off-diagonal hop |s> -> |s ^ (1<<i)>
// within the sector; returns false when the target orbit is not in it
bool hop(const OrbitInfo& o, const Sector& sec, int kx, int ky, int target,
         double norm_src, int& col, cplx& phase) {
    const int rep = o.rep_of[target];
    col = sec.pos[rep];
    if (col < 0) return false;
    const double arg = -2.0 * M_PI *
                       (kx * o.tx_of[target] + ky * o.ty_of[target]) / L;
    phase = std::polar(std::sqrt(sec.norm[col] / norm_src), arg);
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 4 || (argc - 2) % 2 != 0) {
        std::fprintf(stderr, "usage: %s L g betaJ [g betaJ ...]\n", argv[0]);
        return 2;
    }
    L = std::atoi(argv[1]);
    N = L * L;
    NSTATES = 1 << N;
    std::vector<std::pair<double, double>> points;
    for (int a = 2; a + 1 < argc; a += 2)
        points.emplace_back(std::atof(argv[a]), std::atof(argv[a + 1]));

    std::vector<std::pair<int, int>> bonds;
    for (int y = 0; y < L; ++y)
        for (int x = 0; x < L; ++x) {
            if (L > 2 || x + 1 < L) bonds.emplace_back(site(x, y), site(x + 1, y));
            if (L > 2 || y + 1 < L) bonds.emplace_back(site(x, y), site(x, y + 1));
        }

    const OrbitInfo orb = build_orbits();
    std::fprintf(stderr, "L=%d, %zu orbits\n", L, orb.reps.size());

    // gather distinct g values; (kx, ky) and (-kx, -ky) give identical traces
    std::map<double, std::vector<std::pair<double, double>>> by_g;
    for (auto [g, bJ] : points) by_g[g].emplace_back(g, bJ);

    std::printf("# L=%d  columns: g betaJ energy jx var_jy var_jz qv_jz\n", L);
    for (auto& [g, pts] : by_g) {
        const double gamma = g * J;
        // per eigenstate: energy, <Jx>, <Jz^2>, <Jy^2>; per (sector, beta):
        // QV correlator partial sums handled with a local shift
        std::vector<double> all_e, all_jx, all_jz2, all_jy2, all_mult;
        // pair_term[beta index] accumulated with absolute energies is
        // numerically unsafe; store per-sector shifted values instead
        std::vector<std::vector<double>> pair_term(pts.size());
        std::vector<std::vector<double>> pair_shift(pts.size());

        for (int kx = 0; kx < L; ++kx)
            for (int ky = 0; ky < L; ++ky) {
                // keep one of each conjugate pair, weight 2 when distinct
                const int mkx = (L - kx) % L, mky = (L - ky) % L;
                if (std::make_pair(mkx, mky) < std::make_pair(kx, ky)) continue;
                const double mult = (mkx == kx && mky == ky) ? 1.0 : 2.0;

                const Sector sec = build_sector(orb, kx, ky);
                const int d = static_cast<int>(sec.basis.size());
                if (d == 0) continue;
                std::vector<cplx> H(static_cast<std::size_t>(d) * d, cplx(0));
                for (int a = 0; a < d; ++a) {
                    const int s = sec.basis[a];
                    H[static_cast<std::size_t>(a) * d + a] +=
                        ising_energy(s, bonds);
                    for (int i = 0; i < N; ++i) {
                        int col;
                        cplx ph;
                        if (!hop(orb, sec, kx, ky, s ^ (1 << i), sec.norm[a],
                                 col, ph))
                            continue;
                        // column-major: element (row=col, col=a)
                        H[static_cast<std::size_t>(a) * d + col] +=
                            -0.5 * gamma * ph;
                    }
                }
                std::vector<double> w(d);
                const int info = LAPACKE_zheevd(
                    LAPACK_COL_MAJOR, 'V', 'L', d,
                    reinterpret_cast<lapack_complex_double*>(H.data()), d,
                    w.data());
                if (info != 0) throw std::runtime_error("zheevd failed");
                // H now holds eigenvectors (column-major)
                const cplx* V = H.data();

                // per-eigenstate scalars
                std::vector<cplx> tmp(d);
                for (int nn = 0; nn < d; ++nn) {
                    const cplx* v = V + static_cast<std::size_t>(nn) * d;
                    double jz2 = 0;
                    for (int a = 0; a < d; ++a) {
                        const double m = jz_of(sec.basis[a]);
                        jz2 += m * m * std::norm(v[a]);
                    }
                    // Jx|v> and Jy|v>
                    double jx = 0, jy2 = 0;
                    std::fill(tmp.begin(), tmp.end(), cplx(0));
                    std::vector<cplx> tmpy(d, cplx(0));
                    for (int a = 0; a < d; ++a) {
                        const int s = sec.basis[a];
                        if (v[a] == cplx(0)) continue;
                        for (int i = 0; i < N; ++i) {
                            int col;
                            cplx ph;
                            if (!hop(orb, sec, kx, ky, s ^ (1 << i),
                                     sec.norm[a], col, ph))
                                continue;
                            tmp[col] += 0.5 * ph * v[a];
                            // S^y flips with +-i/2 by the original spin
                            const cplx cy = (s >> i & 1) ? cplx(0, 0.5)
                                                         : cplx(0, -0.5);
                            tmpy[col] += cy * ph * v[a];
                        }
                    }
                    for (int a = 0; a < d; ++a) {
                        jx += std::real(std::conj(v[a]) * tmp[a]);
                        jy2 += std::norm(tmpy[a]);
                    }
                    all_e.push_back(w[nn]);
                    all_jx.push_back(jx);
                    all_jz2.push_back(jz2);
                    all_jy2.push_back(jy2);
                    all_mult.push_back(mult);
                }

                // M = V^dag Jz V for the integrated correlator
                std::vector<cplx> W(static_cast<std::size_t>(d) * d);
                for (int nn = 0; nn < d; ++nn)
                    for (int a = 0; a < d; ++a)
                        W[static_cast<std::size_t>(nn) * d + a] =
                            jz_of(sec.basis[a]) *
                            V[static_cast<std::size_t>(nn) * d + a];
                std::vector<cplx> M(static_cast<std::size_t>(d) * d);
                {
                    const cplx one(1), zero(0);
                    cblas_zgemm(CblasColMajor, CblasConjTrans, CblasNoTrans, d,
                                d, d, &one, V, d, W.data(), d, &zero, M.data(),
                                d);
                }
                for (std::size_t p = 0; p < pts.size(); ++p) {
                    const double beta = pts[p].second / J;
                    const double shift = w[0];
                    double acc = 0;
                    for (int nn = 0; nn < d; ++nn)
                        for (int mm = 0; mm < d; ++mm) {
                            const double m2 =
                                std::norm(M[static_cast<std::size_t>(nn) * d + mm]);
                            if (m2 == 0) continue;
                            const double en = w[nn] - shift, em = w[mm] - shift;
                            double f;
                            if (std::abs(em - en) < 1e-12)
                                f = std::exp(-beta * en);
                            else
                                f = (std::exp(-beta * en) - std::exp(-beta * em)) /
                                    (beta * (em - en));
                            acc += m2 * f;
                        }
                    pair_term[p].push_back(mult * acc);
                    pair_shift[p].push_back(shift);
                }
            }

        double e0 = all_e[0];
        for (double e : all_e) e0 = std::min(e0, e);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const double beta = pts[p].second / J;
            double Z = 0, sE = 0, sJx = 0, sJz2 = 0, sJy2 = 0;
            for (std::size_t q = 0; q < all_e.size(); ++q) {
                const double wgt = all_mult[q] * std::exp(-beta * (all_e[q] - e0));
                Z += wgt;
                sE += wgt * all_e[q];
                sJx += wgt * all_jx[q];
                sJz2 += wgt * all_jz2[q];
                sJy2 += wgt * all_jy2[q];
            }
            double corr = 0;
            for (std::size_t q = 0; q < pair_term[p].size(); ++q)
                corr += pair_term[p][q] *
                        std::exp(-beta * (pair_shift[p][q] - e0));
            const double qv = sJz2 / Z - corr / Z;
            std::printf("%.10g %.10g %.12f %.12f %.12f %.12f %.12f\n", g,
                        pts[p].second, sE / Z, sJx / Z, sJy2 / Z, sJz2 / Z, qv);
            std::fflush(stdout);
        }
    }
    return 0;
}
