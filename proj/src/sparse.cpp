#include "sparselab/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sparselab/error.hpp"
#include "sparselab/maximal.hpp"

namespace sparselab {

std::string to_string(Flavor f) { return f == Flavor::whitney ? "whitney" : "stopping_time"; }

namespace {

std::size_t range_count(const std::vector<std::pair<std::int64_t, std::int64_t>>& r) {
    std::size_t c = 1;
    for (auto [lo, hi] : r) c *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi - lo));
    return c;
}

template <class Fn>
void for_each_cell(const CellLattice& lat, const std::vector<std::pair<std::int64_t, std::int64_t>>& r, Fn&& fn) {
    if (range_count(r) == 0) return;
    std::vector<std::int64_t> idx(r.size());
    for (std::size_t a = 0; a < r.size(); ++a) idx[a] = r[a].first;
    while (true) {
        fn(lat.flatten(idx));
        std::size_t a = r.size();
        while (a-- > 0) {
            if (++idx[a] < r[a].second) break;
            idx[a] = r[a].first;
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
}

std::optional<Box> joint_support(const GridFunction& f, const GridFunction& g) {
    auto a = f.support_box(), b = g.support_box();
    if (!a) return b;
    if (!b) return a;
    Box u = *a;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        u.lower[i] = min(u.lower[i], b->lower[i]);
        u.upper[i] = max(u.upper[i], b->upper[i]);
    }
    return u;
}

Box roots_union(std::size_t n, int k, const std::vector<int>& omega) {
    Box b;
    const Rational s = Rational::pow2(-k);
    const Rational sign = (k % 2 != 0) ? Rational(1) : Rational(-1);
    for (std::size_t i = 0; i < n; ++i) {
        const Rational shift = sign * Rational(omega[i], 3);
        b.lower.push_back(s * (Rational(-1) + shift));
        b.upper.push_back(s * (Rational(1) + shift));
    }
    return b;
}

std::vector<std::vector<int>> all_omegas(std::size_t n) {
    std::vector<std::vector<int>> out;
    const int total = n == 1 ? 3 : 9;
    for (int t = 0; t < total; ++t) {
        std::vector<int> w(n);
        int v = t;
        for (std::size_t i = n; i-- > 0;) {
            w[i] = v % 3;
            v /= 3;
        }
        out.push_back(w);
    }
    return out;
}

// Grid-aligned frame holding every box; cells_per_axis is shared by all axes.
CellLattice make_frame(const GridSpec& spec, const std::vector<Box>& boxes) {
    const Rational h = spec.spacing(), o = spec.origin();
    std::int64_t below = 0, above = spec.N();
    for (const Box& b : boxes)
        for (std::size_t i = 0; i < b.dim(); ++i) {
            below = std::max(below, ((o - b.lower[i]) / h).ceil());
            above = std::max(above, ((b.upper[i] - o) / h).ceil());
        }
    CellLattice lat;
    lat.n = static_cast<std::size_t>(spec.n);
    lat.spacing = h;
    lat.origin = o - Rational(below) * h;
    lat.cells_per_axis = below + above;
    return lat;
}

void fill_survivors(SparseCollection& S) {
    std::vector<std::uint8_t> mark(S.frame.total_cells(), 0);
    for (auto& e : S.entries) {
        e.survivor.clear();
        for (std::size_t c : e.children)
            for_each_cell(S.frame, S.frame.midpoint_range(cube_box(S.entries[c].cube)), [&](std::size_t i) { mark[i] = 1; });
        for_each_cell(S.frame, S.frame.midpoint_range(cube_box(e.cube)), [&](std::size_t i) {
            if (!mark[i]) e.survivor.push_back(i);
        });
        for (std::size_t c : e.children)
            for_each_cell(S.frame, S.frame.midpoint_range(cube_box(S.entries[c].cube)), [&](std::size_t i) { mark[i] = 0; });
        std::sort(e.survivor.begin(), e.survivor.end());
    }
}

void finalize(SparseCollection& S, const GridSpec& spec) {
    std::vector<Box> boxes;
    for (const auto& e : S.entries) boxes.push_back(e.box);
    S.frame = make_frame(spec, boxes);
    fill_survivors(S);
}

double average_or_max(const AverageTable* t, const GridFunction& f, const Box& b, double p) {
    return t ? t->average(b) : average_p(f, b, p);
}

}  // namespace

void finalize_collection(SparseCollection& S, const GridSpec& spec) { finalize(S, spec); }

std::size_t SparseCollection::box_cells(std::size_t i) const { return range_count(frame.midpoint_range(entries[i].box)); }
std::size_t SparseCollection::cube_cells(std::size_t i) const {
    return range_count(frame.midpoint_range(cube_box(entries[i].cube)));
}
std::vector<Box> SparseCollection::boxes() const {
    std::vector<Box> b;
    for (const auto& e : entries) b.push_back(e.box);
    return b;
}
std::vector<int> SparseCollection::ranks() const {
    std::vector<int> r;
    for (const auto& e : entries) r.push_back(e.rank);
    return r;
}

std::vector<DyadicCube> root_cubes(std::size_t n, int k, const std::vector<int>& omega) {
    std::vector<DyadicCube> out;
    for (std::size_t t = 0; t < (std::size_t{1} << n); ++t) {
        DyadicCube c{k, std::vector<std::int64_t>(n), omega};
        for (std::size_t i = 0; i < n; ++i) c.m[i] = ((t >> (n - 1 - i)) & 1) ? 0 : -1;
        out.push_back(c);
    }
    return out;
}

int default_root_scale(const GridFunction& f, const GridFunction& g) {
    const GridSpec& spec = f.spec();
    const auto supp = joint_support(f, g);
    const auto n = static_cast<std::size_t>(spec.n);
    for (int k = spec.kappa; k >= -spec.K - 2; --k) {
        if (!supp) return k;
        bool ok = true;
        for (const auto& w : all_omegas(n)) ok = ok && roots_union(n, k, w).contains(*supp);
        if (ok) return k;
    }
    return -spec.K - 2;
}

SparseCollection build_stopping_time(const GridFunction& f, const GridFunction& g, const StoppingConfig& cfg) {
    const GridSpec& spec = f.spec();
    if (!(g.spec() == spec)) throw Error("f and g live on different grids");
    ExponentPair{cfg.r, conjugate(cfg.s_prime)}.validate();
    const double ff = cfg.f_factor.value_or(std::pow(4.0, 1.0 / cfg.r));
    const double gf = cfg.g_factor.value_or(std::isinf(cfg.s_prime) ? 1.0 : std::pow(4.0, 1.0 / cfg.s_prime));
    if (!(ff > 1) || (!(gf > 1) && !std::isinf(cfg.s_prime))) throw Error("stopping thresholds must exceed 1");

    const auto n = static_cast<std::size_t>(spec.n);
    const int k0 = cfg.k0.value_or(default_root_scale(f, g));
    if (const auto supp = joint_support(f, g))
        for (const auto& w : all_omegas(n))
            if (!roots_union(n, k0, w).contains(*supp)) throw Error("root scale too fine");
    if (k0 > spec.kappa) throw Error("root scale too fine");

    const AverageTable tf(f, cfg.r);
    std::optional<AverageTable> tg;
    if (!std::isinf(cfg.s_prime)) tg.emplace(g, cfg.s_prime);
    const AverageTable* tgp = tg ? &*tg : nullptr;

    SparseCollection S;
    S.flavor = Flavor::stopping_time;
    S.n = n;
    S.eta = 0.5;
    S.info["root_scale"] = k0;
    S.info["finest_scale"] = spec.kappa;
    const int finest = spec.kappa;

    for (const auto& w : all_omegas(n)) {
        std::vector<std::size_t> level;
        for (const auto& c : root_cubes(n, k0, w)) {
            S.entries.push_back({c, cube_box(c), 0, {}, {}, std::nullopt, 0});
            level.push_back(S.entries.size() - 1);
        }
        const std::vector<std::size_t> roots = level;
        for (int p = 1; !level.empty(); ++p) {
            std::vector<std::size_t> next;
            for (std::size_t qi : level) {
                const DyadicCube Q = S.entries[qi].cube;
                if (Q.k >= finest) continue;  // one-cell cubes never recurse
                const Box qb = cube_box(Q);
                const double thr_f = ff * tf.average(qb);
                const double thr_g = gf * average_or_max(tgp, g, qb, cfg.s_prime);
                std::vector<DyadicCube> stack = children(Q);
                std::reverse(stack.begin(), stack.end());
                while (!stack.empty()) {
                    const DyadicCube c = stack.back();
                    stack.pop_back();
                    const Box cb = cube_box(c);
                    const double af = tf.average(cb);
                    const double ag = average_or_max(tgp, g, cb, cfg.s_prime);
                    if (af > thr_f || ag > thr_g) {
                        S.entries.push_back({c, cb, p, {}, {}, qi, 0});
                        S.entries[qi].children.push_back(S.entries.size() - 1);
                        next.push_back(S.entries.size() - 1);
                        continue;
                    }
                    if (c.k >= finest || (af == 0 && ag == 0)) continue;
                    auto ch = children(c);
                    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
                }
            }
            level = std::move(next);
        }
        if (cfg.coarsest && *cfg.coarsest < k0) {
            std::vector<std::size_t> lower = roots;
            for (int k = k0 - 1, p = -1; k >= *cfg.coarsest; --k, --p) {
                std::vector<std::size_t> upper;
                std::map<DyadicCube, std::size_t> made;
                for (std::size_t c : lower) {
                    const DyadicCube par = S.entries[c].cube.parent();
                    auto it = made.find(par);
                    if (it == made.end()) {
                        S.entries.push_back({par, cube_box(par), p, {}, {}, std::nullopt, 0});
                        it = made.emplace(par, S.entries.size() - 1).first;
                        upper.push_back(it->second);
                    } else {
                        // shifted lattices: two chain cubes share a parent, which then keeps nothing
                        S.info["chain_merges"] += 1;
                    }
                    S.entries[it->second].children.push_back(c);
                    S.entries[c].parent = it->second;
                }
                lower = std::move(upper);
            }
            S.info["coarsest_scale"] = *cfg.coarsest;
            S.info.emplace("chain_merges", 0);
        }
    }
    finalize(S, spec);
    return S;
}

std::vector<DyadicCube> survivor_cubes(const SparseCollection& S, std::size_t entry, int k) {
    const SparseEntry& e = S.entries[entry];
    std::vector<DyadicCube> out;
    if (k < e.cube.k) return out;
    std::vector<Box> kids;
    for (std::size_t c : e.children) kids.push_back(cube_box(S.entries[c].cube));
    for (const DyadicCube& q : cubes_meeting(cube_box(e.cube), k, e.cube.omega)) {
        const Box qb = cube_box(q);
        bool inside = false;
        for (const Box& kb : kids) inside = inside || kb.contains(qb);
        if (!inside) out.push_back(q);
    }
    return out;
}

int whitney_rank0_scale(int l1, double l2) {
    const double need = std::ldexp(1.0, l1) + 2 * l2;
    int k = 0;
    while (std::ldexp(1.0, -k) < need) --k;
    return k;
}

SparseCollection build_whitney_sparse(const GridFunction& f, const GridFunction& g, const WhitneyConfig& cfg) {
    const GridSpec& spec = f.spec();
    if (!(g.spec() == spec)) throw Error("f and g live on different grids");
    if (!(cfg.eta > 0 && cfg.eta < 1)) throw Error("sparsity eta must lie in (0,1)");
    ExponentPair{cfg.r, conjugate(cfg.s_prime)}.validate();
    const auto n = static_cast<std::size_t>(spec.n);
    const double nn = static_cast<double>(n);
    const double wr = cfg.weak_r.value_or(std::pow(3.0, nn / cfg.r));
    const double ws = cfg.weak_s.value_or(std::isinf(cfg.s_prime) ? 1.0 : std::pow(3.0, nn / cfg.s_prime));
    const double c1 = std::pow(std::pow(3.0, nn + 1) / (1 - cfg.eta), 1 / cfg.r) * wr;
    const double c2 = std::isinf(cfg.s_prime) ? kInf : std::pow(2 / (1 - cfg.eta), 1 / cfg.s_prime) * ws;
    if (!(c1 > 1) || !(c2 > 1)) throw Error("level-set thresholds must exceed 1");

    const int k_r = cfg.rank0_scale.value_or(whitney_rank0_scale(cfg.l1, cfg.l2));
    if (k_r > spec.kappa) throw Error("rank-0 scale below grid spacing");

    SparseCollection S;
    S.flavor = Flavor::whitney;
    S.n = n;
    S.eta = std::pow(3.0, -nn) * cfg.eta;
    S.info["rank0_scale"] = k_r;
    S.info["finest_scale"] = spec.kappa;
    S.info["truncated"] = 0;
    S.info["oversized"] = 0;
    S.info["whitney_audit_failures"] = 0;
    S.info["rank_cap_hits"] = 0;

    const std::vector<int> w0(n, 0);
    const auto supp = joint_support(f, g);
    std::vector<std::size_t> level;
    if (supp)
        for (const DyadicCube& q : cubes_meeting(*supp, k_r, w0)) {
            S.entries.push_back({q, concentric_dilate(q, Rational(3)), 0, {}, {}, std::nullopt, 0});
            level.push_back(S.entries.size() - 1);
        }

    const AverageTable tf(f, cfg.r);
    std::optional<AverageTable> tg;
    if (!std::isinf(cfg.s_prime)) tg.emplace(g, cfg.s_prime);
    const Rational h = spec.spacing();
    const auto Nn = spec.N();

    for (int p = 1; !level.empty(); ++p) {
        std::vector<std::size_t> next;
        for (std::size_t qi : level) {
            const DyadicCube Q = S.entries[qi].cube;
            if (Q.k >= spec.kappa) continue;  // one grid cell
            if (p > cfg.max_rank) {
                S.info["rank_cap_hits"] += 1;
                continue;
            }
            const Box qb = cube_box(Q), tb = S.entries[qi].box;
            const std::int64_t W = (tb.side() / h).floor();
            std::vector<std::int64_t> base(n);
            for (std::size_t a = 0; a < n; ++a) base[a] = ((tb.lower[a] - spec.origin()) / h).floor();
            const std::int64_t qlo = ((qb.lower[0] - tb.lower[0]) / h).floor();
            const std::int64_t qhi = qlo + ((qb.side() / h)).floor();

            const std::size_t total = n == 1 ? static_cast<std::size_t>(W) : static_cast<std::size_t>(W * W);
            std::vector<double> af(total, 0), ag(total, 0);
            for (std::size_t t = 0; t < total; ++t) {
                std::vector<std::int64_t> wi(n);
                if (n == 1) wi[0] = static_cast<std::int64_t>(t);
                else wi = {static_cast<std::int64_t>(t) / W, static_cast<std::int64_t>(t) % W};
                bool in_grid = true, in_q = true;
                std::size_t flat = 0;
                for (std::size_t a = 0; a < n; ++a) {
                    const std::int64_t gi = base[a] + wi[a];
                    in_grid = in_grid && gi >= 0 && gi < Nn;
                    in_q = in_q && wi[a] >= qlo && wi[a] < qhi;
                    flat = flat * static_cast<std::size_t>(Nn) + static_cast<std::size_t>(std::max<std::int64_t>(0, gi));
                }
                if (!in_grid) continue;
                af[t] = std::abs(f[flat]);
                if (in_q) ag[t] = std::abs(g[flat]);
            }
            const double avg_f = tf.average(tb);
            const double avg_g = tg ? tg->average(qb) : average_p(g, qb, kInf);
            const auto Uw = static_cast<std::size_t>(W);
            const std::vector<double> mf =
                n == 1 ? raw::maximal_1d(af, cfg.r, Uw) : raw::maximal_squares(af, Uw, Uw, cfg.r, Uw);
            std::vector<double> mg;
            if (!std::isinf(cfg.s_prime))
                mg = n == 1 ? raw::maximal_1d(ag, cfg.s_prime, Uw) : raw::maximal_squares(ag, Uw, Uw, cfg.s_prime, Uw);

            // window lattice in coordinates relative to the 3Q corner; the corner is a
            // multiple of side(Q), so cubes no larger than Q keep their dyadic structure
            CellSet F{CellLattice{n, Rational(0), h, W}, std::vector<std::uint8_t>(total, 0)};
            std::size_t fcount = 0;
            for (std::size_t t = 0; t < total; ++t) {
                const bool in1 = mf[t] > c1 * avg_f;
                const bool in2 = !mg.empty() && mg[t] > c2 * avg_g;
                F.mask[t] = in1 || in2;
                fcount += F.mask[t];
            }
            const double qcells = std::pow(static_cast<double>(qhi - qlo), nn);
            S.entries[qi].level_fraction = static_cast<double>(fcount) / qcells;
            if (fcount == 0) continue;

            std::vector<WhitneyCube> wc = whitney_decompose(F, w0);
            if (!audit_whitney(F, wc).ok()) S.info["whitney_audit_failures"] += 1;
            for (auto& c : wc) {
                if (c.cube.k < Q.k + 1) {
                    S.info["oversized"] += 1;  // at least as large as Q: never kept
                    c.cube.k = std::numeric_limits<int>::min();
                    continue;
                }
                for (std::size_t a = 0; a < n; ++a) c.cube.m[a] += ((tb.lower[a] / c.cube.side())).floor();
            }
            for (const auto& c : wc) {
                if (c.cube.k == std::numeric_limits<int>::min()) continue;
                const Box cb = cube_box(c.cube);
                if (!qb.contains(cb)) continue;
                if (c.truncated) S.info["truncated"] += 1;
                S.entries.push_back({c.cube, concentric_dilate(c.cube, Rational(3)), p, {}, {}, qi, 0});
                S.entries[qi].children.push_back(S.entries.size() - 1);
                next.push_back(S.entries.size() - 1);
            }
        }
        level = std::move(next);
    }
    finalize(S, spec);
    return S;
}

ProbeReport verify_sparsity(const SparseCollection& S, double eta, const GridFunction* f, const GridFunction* g) {
    ProbeReport rep;
    rep.name = "sparsity";
    rep.inputs["flavor"] = to_string(S.flavor);
    rep.inputs["entries"] = std::to_string(S.entries.size());
    rep.constants["eta_target"] = eta;

    // survivors are disjoint within each ω family
    std::map<std::vector<int>, std::vector<std::uint8_t>> used;
    double worst = kInf;
    std::size_t overlaps = 0;
    for (std::size_t i = 0; i < S.entries.size(); ++i) {
        const auto& e = S.entries[i];
        auto& mask = used[e.cube.omega];
        if (mask.empty()) mask.assign(S.frame.total_cells(), 0);
        for (std::size_t c : e.survivor) {
            if (mask[c]) ++overlaps;
            mask[c] = 1;
        }
        const double ratio = static_cast<double>(e.survivor.size()) / static_cast<double>(S.box_cells(i));
        worst = std::min(worst, ratio);
        if (ratio < eta) rep.fail("entry " + std::to_string(i) + " survivor ratio " + std::to_string(ratio));
    }
    if (S.entries.empty()) worst = 1;
    if (overlaps) rep.fail("survivor sets overlap in " + std::to_string(overlaps) + " cells");
    rep.constants["eta_measured"] = worst;
    rep.constants["overlap_cells"] = static_cast<double>(overlaps);
    rep.constants["families"] = static_cast<double>(used.size());

    if (S.flavor == Flavor::whitney && !S.entries.empty()) {
        const CubePoset P(S.boxes(), S.ranks());
        const auto chk = P.check();
        rep.constants["poset_ok"] = chk.ok();
        if (!chk.ok()) rep.fail("poset axioms");
        std::size_t mismatched = 0;
        for (std::size_t i = 0; i < S.entries.size(); ++i) {
            auto cov = P.covered(i);
            auto kids = S.entries[i].children;
            std::sort(cov.begin(), cov.end());
            std::sort(kids.begin(), kids.end());
            if (cov != kids) ++mismatched;
        }
        rep.constants["cover_mismatch"] = static_cast<double>(mismatched);
        if (mismatched) rep.fail("covering relation differs from construction in " + std::to_string(mismatched) + " entries");

        // rank zero: equal sides, disjoint thirds
        std::vector<std::size_t> zero;
        for (std::size_t i = 0; i < S.entries.size(); ++i)
            if (S.entries[i].rank == 0) zero.push_back(i);
        bool disjoint = true, same_side = true;
        for (std::size_t a = 0; a < zero.size(); ++a)
            for (std::size_t b = a + 1; b < zero.size(); ++b) {
                const Box qa = cube_box(S.entries[zero[a]].cube), qb = cube_box(S.entries[zero[b]].cube);
                disjoint = disjoint && !qa.intersects(qb);
                same_side = same_side && qa.side() == qb.side();
            }
        rep.constants["rank0_disjoint"] = disjoint;
        rep.constants["rank0_same_side"] = same_side;
        if (!disjoint || !same_side) rep.fail("rank-zero thirds not a disjoint equal-side family");

        std::size_t uncovered = 0;
        for (const GridFunction* h : {f, g}) {
            if (!h) continue;
            for (std::size_t c = 0; c < h->size(); ++c) {
                if ((*h)[c] == cplx(0)) continue;
                const auto pt = h->point(c);
                bool in = false;
                for (std::size_t i : zero) {
                    const Box qb = cube_box(S.entries[i].cube);
                    bool inside = true;
                    for (std::size_t a = 0; a < pt.size(); ++a)
                        inside = inside && qb.lower[a].to_double() <= pt[a] && pt[a] < qb.upper[a].to_double();
                    in = in || inside;
                }
                if (!in) ++uncovered;
            }
        }
        rep.constants["support_uncovered_cells"] = static_cast<double>(uncovered);
        if (uncovered) rep.fail("support not covered by rank-zero thirds");
    }
    return rep;
}

double decomposition_residual(const SparseCollection& S, const GridFunction& f, int k) {
    const GridSpec& spec = f.spec();
    GridFunction acc(spec);
    const CellLattice lat = spec.lattice();
    for (std::size_t i = 0; i < S.entries.size(); ++i) {
        if (S.entries[i].cube.k > k) continue;
        for (const DyadicCube& q : survivor_cubes(S, i, k)) {
            auto r = lat.midpoint_range(third_dilate(q));
            for (auto& [lo, hi] : r) {
                lo = std::max<std::int64_t>(lo, 0);
                hi = std::min<std::int64_t>(hi, spec.N());
            }
            for_each_cell(lat, r, [&](std::size_t c) { acc[c] += f[c]; });
        }
    }
    return max_abs_diff(acc, f);
}

SurvivorBound survivor_average_bound(const SparseCollection& S, const GridFunction& f, const GridFunction& g, double r,
                                     double s_prime) {
    const AverageTable tf(f, r);
    std::optional<AverageTable> tg;
    if (!std::isinf(s_prime)) tg.emplace(g, s_prime);
    const int finest = f.spec().kappa;
    auto ratio = [](double num, double den) { return num == 0 ? 0.0 : (den == 0 ? kInf : num / den); };
    SurvivorBound out;
    for (std::size_t i = 0; i < S.entries.size(); ++i) {
        const Box qb = cube_box(S.entries[i].cube);
        const double fq = tf.average(qb);
        const double gq = tg ? tg->average(qb) : average_p(g, qb, kInf);
        for (int k = S.entries[i].cube.k; k <= finest; ++k)
            for (const DyadicCube& q : survivor_cubes(S, i, k)) {
                const Box b = cube_box(q);
                out.f_ratio = std::max(out.f_ratio, ratio(tf.average(b), fq));
                out.g_ratio = std::max(out.g_ratio, ratio(tg ? tg->average(b) : average_p(g, b, kInf), gq));
                ++out.cubes;
            }
    }
    return out;
}

double sparse_form(const SparseCollection& S, const GridFunction& f, const GridFunction& g, double r, double s_prime) {
    const AverageTable tf(f, r);
    std::optional<AverageTable> tg;
    if (!std::isinf(s_prime)) tg.emplace(g, s_prime);
    double total = 0;
    for (const auto& e : S.entries) {
        const double af = tf.average(e.box);
        if (af == 0) continue;
        const double ag = tg ? tg->average(e.box) : average_p(g, e.box, kInf);
        total += e.box.measure().to_double() * af * ag;
    }
    return total;
}

void write_text(std::ostream& os, const SparseCollection& S) {
    os << "# flavor " << to_string(S.flavor) << " n " << S.n << " eta " << S.eta << " origin " << S.frame.origin.num()
       << ' ' << S.frame.origin.den() << " spacing " << S.frame.spacing.num() << ' ' << S.frame.spacing.den()
       << " cells " << S.frame.cells_per_axis << '\n';
    os << "# info";
    for (const auto& [k, v] : S.info) os << ' ' << k << ' ' << v;
    os << '\n';
    for (const auto& e : S.entries) {
        for (int w : e.cube.omega) os << w;
        os << ' ' << e.rank << ' ' << e.cube.k;
        for (auto m : e.cube.m) os << ' ' << m;
        for (std::size_t i = 0; i < e.survivor.size();) {
            std::size_t j = i;
            while (j + 1 < e.survivor.size() && e.survivor[j + 1] == e.survivor[j] + 1) ++j;
            os << ' ' << e.survivor[i] << '+' << (j - i + 1);
            i = j + 1;
        }
        os << '\n';
    }
}

SparseCollection read_text(std::istream& is) {
    SparseCollection S;
    std::string line;
    auto bad = [](const std::string& why) { return Error("sparse collection text: " + why); };
    if (!std::getline(is, line)) throw bad("missing header");
    {
        std::istringstream hs(line);
        std::string hash, key, flavor;
        std::int64_t on, od, sn, sd;
        hs >> hash >> key >> flavor;
        if (hash != "#" || key != "flavor") throw bad("malformed header");
        S.flavor = flavor == "whitney" ? Flavor::whitney : Flavor::stopping_time;
        hs >> key >> S.n >> key >> S.eta >> key >> on >> od >> key >> sn >> sd >> key >> S.frame.cells_per_axis;
        if (!hs) throw bad("malformed header");
        S.frame.n = S.n;
        S.frame.origin = Rational(on, od);
        S.frame.spacing = Rational(sn, sd);
    }
    if (!std::getline(is, line)) throw bad("missing info line");
    {
        std::istringstream in(line);
        std::string hash, key;
        in >> hash >> key;
        double v;
        while (in >> key >> v) S.info[key] = v;
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string om;
        SparseEntry e;
        ls >> om >> e.rank >> e.cube.k;
        if (om.size() != S.n) throw bad("omega width");
        for (char c : om) e.cube.omega.push_back(c - '0');
        e.cube.m.resize(S.n);
        for (auto& m : e.cube.m) ls >> m;
        if (!ls) throw bad("malformed entry");
        std::string run;
        while (ls >> run) {
            const auto plus = run.find('+');
            if (plus == std::string::npos) throw bad("malformed run");
            const std::size_t a = std::stoull(run.substr(0, plus)), len = std::stoull(run.substr(plus + 1));
            for (std::size_t t = 0; t < len; ++t) e.survivor.push_back(a + t);
        }
        e.box = S.flavor == Flavor::whitney ? concentric_dilate(e.cube, Rational(3)) : cube_box(e.cube);
        S.entries.push_back(std::move(e));
    }
    // children: entries one rank deeper whose cube sits inside, same ω
    for (std::size_t i = 0; i < S.entries.size(); ++i)
        for (std::size_t j = 0; j < S.entries.size(); ++j) {
            auto& a = S.entries[i];
            auto& b = S.entries[j];
            if (b.rank == a.rank + 1 && b.cube.omega == a.cube.omega && cube_box(a.cube).contains(cube_box(b.cube))) {
                a.children.push_back(j);
                b.parent = i;
            }
        }
    return S;
}

}  // namespace sparselab
