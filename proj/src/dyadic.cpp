#include "sparselab/dyadic.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

// Sign of the ω-shift at scale k.
int shift_sign(int k) { return (k % 2 != 0) ? 1 : -1; }

Rational shift_of(int k, int omega) { return Rational(shift_sign(k) * omega, 3); }

}  // namespace

Rational Box::measure() const {
    Rational v(1);
    for (std::size_t i = 0; i < dim(); ++i) v *= side(i);
    return v;
}

bool Box::contains(const Box& other) const {
    for (std::size_t i = 0; i < dim(); ++i) {
        if (other.lower[i] < lower[i] || other.upper[i] > upper[i]) return false;
    }
    return true;
}

bool Box::intersects(const Box& other) const {
    for (std::size_t i = 0; i < dim(); ++i) {
        if (!(other.lower[i] < upper[i] && lower[i] < other.upper[i])) return false;
    }
    return true;
}

bool Box::contains_point(const std::vector<Rational>& p) const {
    for (std::size_t i = 0; i < dim(); ++i) {
        if (p[i] < lower[i] || !(p[i] < upper[i])) return false;
    }
    return true;
}

std::string Box::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (i) os << "x";
        os << "[" << lower[i] << "," << upper[i] << ")";
    }
    return os.str();
}

DyadicCube DyadicCube::parent() const {
    std::vector<Rational> p;
    const Box b = cube_box(*this);
    for (std::size_t i = 0; i < dim(); ++i) p.push_back(b.center(i));
    return cube_containing(p, k - 1, omega);
}

std::string DyadicCube::str() const {
    std::ostringstream os;
    os << "k=" << k << " m=(";
    for (std::size_t i = 0; i < m.size(); ++i) os << (i ? "," : "") << m[i];
    os << ") w=(";
    for (std::size_t i = 0; i < omega.size(); ++i) os << (i ? "," : "") << omega[i];
    os << ")";
    return os.str();
}

Box cube_box(const DyadicCube& c) {
    Box b;
    const Rational scale = Rational::pow2(-c.k);
    for (std::size_t i = 0; i < c.dim(); ++i) {
        const Rational lo = (Rational(c.m[i]) + shift_of(c.k, c.omega[i])) * scale;
        b.lower.push_back(lo);
        b.upper.push_back(lo + scale);
    }
    return b;
}

Box concentric_dilate(const Box& b, const Rational& factor) {
    if (factor <= Rational(0)) throw Error("dilation factor must be positive");
    Box out;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        const Rational c = b.center(i);
        const Rational half = b.side(i) * factor * Rational(1, 2);
        out.lower.push_back(c - half);
        out.upper.push_back(c + half);
    }
    return out;
}

Box concentric_dilate(const DyadicCube& c, const Rational& factor) { return concentric_dilate(cube_box(c), factor); }
Box third_dilate(const Box& b) { return concentric_dilate(b, Rational(1, 3)); }
Box third_dilate(const DyadicCube& c) { return third_dilate(cube_box(c)); }

DyadicCube cube_containing(const std::vector<Rational>& p, int k, const std::vector<int>& omega) {
    DyadicCube c;
    c.k = k;
    c.omega = omega;
    const Rational inv = Rational::pow2(k);
    for (std::size_t i = 0; i < p.size(); ++i) {
        c.m.push_back((p[i] * inv - shift_of(k, omega[i])).floor());
    }
    return c;
}

std::vector<DyadicCube> cubes_meeting(const Box& b, int k, const std::vector<int>& omega) {
    const std::size_t n = b.dim();
    const Rational inv = Rational::pow2(k);
    std::vector<std::int64_t> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Rational s = shift_of(k, omega[i]);
        lo[i] = (b.lower[i] * inv - Rational(1) - s).floor() + 1;
        hi[i] = (b.upper[i] * inv - s).ceil() - 1;
        if (hi[i] < lo[i]) return {};
    }
    std::vector<DyadicCube> out;
    std::vector<std::int64_t> m = lo;
    while (true) {
        out.push_back(DyadicCube{k, m, omega});
        std::size_t axis = n;
        while (axis > 0) {
            --axis;
            if (++m[axis] <= hi[axis]) break;
            m[axis] = lo[axis];
            if (axis == 0) return out;
        }
        if (n == 0) return out;
    }
}

std::vector<DyadicCube> children(const DyadicCube& c) { return cubes_meeting(cube_box(c), c.k + 1, c.omega); }

bool dilate_meets(const Box& b, const Rational& factor_sq, const Box& other) {
    for (std::size_t i = 0; i < b.dim(); ++i) {
        const Rational gap = abs(b.center(i) - other.center(i)) - other.side(i) * Rational(1, 2);
        if (gap < Rational(0)) continue;
        // half-width of the dilate is sqrt(factor_sq)·side/2
        if (!(gap * gap * Rational(4) < factor_sq * b.side(i) * b.side(i))) return false;
    }
    return true;
}

Rational box_distance_sq(const Box& a, const Box& b) {
    Rational d(0);
    for (std::size_t i = 0; i < a.dim(); ++i) {
        Rational gap(0);
        if (b.upper[i] < a.lower[i]) gap = a.lower[i] - b.upper[i];
        else if (a.upper[i] < b.lower[i]) gap = b.lower[i] - a.upper[i];
        d += gap * gap;
    }
    return d;
}

std::size_t CellLattice::total_cells() const {
    std::size_t t = 1;
    for (std::size_t i = 0; i < n; ++i) t *= static_cast<std::size_t>(cells_per_axis);
    return t;
}

Box CellLattice::cell_box(const std::vector<std::int64_t>& idx) const {
    Box b;
    for (std::size_t i = 0; i < n; ++i) {
        b.lower.push_back(origin + spacing * Rational(idx[i]));
        b.upper.push_back(origin + spacing * Rational(idx[i] + 1));
    }
    return b;
}

Box CellLattice::domain() const {
    Box b;
    for (std::size_t i = 0; i < n; ++i) {
        b.lower.push_back(origin);
        b.upper.push_back(origin + spacing * Rational(cells_per_axis));
    }
    return b;
}

std::vector<std::pair<std::int64_t, std::int64_t>> CellLattice::midpoint_range(const Box& b) const {
    std::vector<std::pair<std::int64_t, std::int64_t>> r;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t lo = ((b.lower[i] - origin) / spacing - Rational(1, 2)).ceil();
        const std::int64_t hi = ((b.upper[i] - origin) / spacing - Rational(1, 2)).ceil();
        r.emplace_back(lo, hi);
    }
    return r;
}

std::vector<std::int64_t> CellLattice::unflatten(std::size_t flat) const {
    std::vector<std::int64_t> idx(n);
    for (std::size_t i = n; i-- > 0;) {
        idx[i] = static_cast<std::int64_t>(flat % static_cast<std::size_t>(cells_per_axis));
        flat /= static_cast<std::size_t>(cells_per_axis);
    }
    return idx;
}

std::size_t CellLattice::flatten(const std::vector<std::int64_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n; ++i) flat = flat * static_cast<std::size_t>(cells_per_axis) + static_cast<std::size_t>(idx[i]);
    return flat;
}

bool CellSet::empty() const { return count() == 0; }

std::size_t CellSet::count() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

using Range = std::vector<std::pair<std::int64_t, std::int64_t>>;

// Visits every cell index in a product range.
void for_each_cell(const Range& r, const std::function<void(const std::vector<std::int64_t>&)>& fn) {
    const std::size_t n = r.size();
    for (const auto& [lo, hi] : r) {
        if (hi <= lo) return;
    }
    std::vector<std::int64_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = r[i].first;
    while (true) {
        fn(idx);
        std::size_t axis = n;
        while (axis > 0) {
            --axis;
            if (++idx[axis] < r[axis].second) break;
            idx[axis] = r[axis].first;
            if (axis == 0) return;
        }
    }
}

// Distance queries against the complement of an open cell set.
class Complement {
public:
    explicit Complement(const CellSet& open) : open_(open), lat_(open.lattice) {
        const std::size_t total = lat_.total_cells();
        for (std::size_t f = 0; f < total; ++f) {
            if (!open_.mask[f]) cells_.push_back(lat_.cell_box(lat_.unflatten(f)));
        }
        if (lat_.n == 1) {
            const auto N = lat_.cells_per_axis;
            prev_.assign(static_cast<std::size_t>(N), -1);
            next_.assign(static_cast<std::size_t>(N), N);
            std::int64_t last = -1;
            for (std::int64_t i = 0; i < N; ++i) {
                if (!open_.mask[static_cast<std::size_t>(i)]) last = i;
                prev_[static_cast<std::size_t>(i)] = last;
            }
            last = N;
            for (std::int64_t i = N - 1; i >= 0; --i) {
                if (!open_.mask[static_cast<std::size_t>(i)]) last = i;
                next_[static_cast<std::size_t>(i)] = last;
            }
        }
    }

    // Squared distance from b (assumed inside the lattice domain) to the complement,
    // including the exterior of the lattice.
    Rational distance_sq(const Box& b) const {
        const Box dom = lat_.domain();
        Rational best;
        bool have = false;
        auto consider = [&](const Rational& d) {
            if (!have || d < best) { best = d; have = true; }
        };
        for (std::size_t i = 0; i < lat_.n; ++i) {
            const Rational lo_gap = max(Rational(0), b.lower[i] - dom.lower[i]);
            const Rational hi_gap = max(Rational(0), dom.upper[i] - b.upper[i]);
            consider(lo_gap * lo_gap);
            consider(hi_gap * hi_gap);
        }
        if (lat_.n == 1) {
            const auto N = lat_.cells_per_axis;
            // complement cells at or left of the box's first overlapped cell
            std::int64_t first = ((b.lower[0] - lat_.origin) / lat_.spacing).floor();
            std::int64_t last = ((b.upper[0] - lat_.origin) / lat_.spacing).ceil() - 1;
            first = std::clamp<std::int64_t>(first, 0, N - 1);
            last = std::clamp<std::int64_t>(last, 0, N - 1);
            const std::int64_t pl = prev_[static_cast<std::size_t>(last)];
            if (pl >= 0) {
                // any complement cell inside [first,last] overlaps or touches the box
                consider(box_distance_sq(b, lat_.cell_box({pl})));
            }
            const std::int64_t nf = next_[static_cast<std::size_t>(first)];
            if (nf < N) consider(box_distance_sq(b, lat_.cell_box({nf})));
            return best;
        }
        for (const Box& c : cells_) {
            consider(box_distance_sq(b, c));
            if (best == Rational(0)) break;
        }
        return best;
    }

    const std::vector<Box>& cells() const { return cells_; }

private:
    const CellSet& open_;
    const CellLattice& lat_;
    std::vector<Box> cells_;
    std::vector<std::int64_t> prev_, next_;
};

// Counts open cells of a product range; out-of-lattice cells count as closed.
std::size_t open_count(const CellSet& open, const Range& r, std::size_t& total) {
    total = 1;
    for (const auto& [lo, hi] : r) total *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi - lo));
    if (total == 0) return 0;
    const auto N = open.lattice.cells_per_axis;
    Range clipped = r;
    for (auto& [lo, hi] : clipped) {
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, N);
    }
    std::size_t cnt = 0;
    for_each_cell(clipped, [&](const std::vector<std::int64_t>& idx) { cnt += open.mask[open.lattice.flatten(idx)] ? 1 : 0; });
    return cnt;
}

}  // namespace

std::vector<WhitneyCube> whitney_decompose(const CellSet& open, const std::vector<int>& omega, const WhitneyOptions& opts) {
    std::vector<WhitneyCube> out;
    if (open.empty()) return out;
    const CellLattice& lat = open.lattice;
    const Complement comp(open);
    const Box dom = lat.domain();

    // coarsest scale: side at least the domain side
    const Rational dside = dom.side();
    int k_start = 0;
    while (Rational::pow2(-k_start) < dside) --k_start;
    while (Rational::pow2(-k_start) > dside) ++k_start;
    --k_start;

    const Rational ratio_sq = opts.ratio * opts.ratio;
    std::function<void(const DyadicCube&)> visit = [&](const DyadicCube& c) {
        const Box b = cube_box(c);
        const Range r = lat.midpoint_range(b);
        std::size_t total = 0;
        const std::size_t cnt = open_count(open, r, total);
        if (cnt == 0) return;
        const bool inside = (cnt == total);
        if (inside && ratio_sq * b.side() * b.side() <= comp.distance_sq(b)) {
            out.push_back({c, false});
            return;
        }
        if (b.side() <= lat.spacing) {
            if (inside) out.push_back({c, true});
            return;
        }
        for (const DyadicCube& ch : children(c)) visit(ch);
    };
    for (const DyadicCube& c : cubes_meeting(dom, k_start, omega)) visit(c);
    return out;
}

WhitneyAudit audit_whitney(const CellSet& open, const std::vector<WhitneyCube>& cubes, const WhitneyOptions& opts) {
    WhitneyAudit a;
    const CellLattice& lat = open.lattice;
    const Complement comp(open);
    const Box dom = lat.domain();
    const Rational dil_sq = Rational(16 * static_cast<std::int64_t>(lat.n));
    std::vector<int> covered(lat.total_cells(), 0);
    for (const WhitneyCube& wc : cubes) {
        const Box b = cube_box(wc.cube);
        for_each_cell(lat.midpoint_range(b), [&](const std::vector<std::int64_t>& idx) {
            bool in_lattice = true;
            for (auto v : idx) in_lattice = in_lattice && v >= 0 && v < lat.cells_per_axis;
            if (!in_lattice || !open.mask[lat.flatten(idx)]) {
                a.cover_exact = false;
                ++a.violations;
                return;
            }
            ++covered[lat.flatten(idx)];
        });
        if (!wc.truncated && opts.ratio * opts.ratio * b.side() * b.side() > comp.distance_sq(b)) {
            a.criterion = false;
            ++a.violations;
        }
        // Complement = exterior of the lattice plus closed cells.
        bool meets = false;
        for (std::size_t i = 0; i < lat.n && !meets; ++i) {
            const Rational half_sq = dil_sq * b.side() * b.side() * Rational(1, 4);
            const Rational to_lo = b.center(i) - dom.lower[i];
            const Rational to_hi = dom.upper[i] - b.center(i);
            if (to_lo * to_lo < half_sq || to_hi * to_hi < half_sq) meets = true;
        }
        for (std::size_t c = 0; c < comp.cells().size() && !meets; ++c) {
            meets = dilate_meets(b, dil_sq, comp.cells()[c]);
        }
        if (!meets) {
            a.dilate_meets_complement = false;
            ++a.violations;
        }
    }
    for (std::size_t f = 0; f < covered.size(); ++f) {
        if (open.mask[f] && covered[f] != 1) {
            if (covered[f] > 1) a.disjoint = false;
            else a.cover_exact = false;
            ++a.violations;
        }
    }
    return a;
}

CubePoset::CubePoset(std::vector<Box> cubes, std::vector<int> ranks) : cubes_(std::move(cubes)), ranks_(std::move(ranks)) {
    if (cubes_.size() != ranks_.size()) throw Error("poset: one rank per cube required");
    const std::size_t n = cubes_.size();
    for (const Box& b : cubes_) thirds_.push_back(third_dilate(b));
    le_.assign(n, std::vector<std::uint8_t>(n, 0));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) le_[a][b] = thirds_[b].contains(thirds_[a]) ? 1 : 0;
    }
    cover_.assign(n, std::vector<std::uint8_t>(n, 0));
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::size_t> up;
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a && le_[a][b]) up.push_back(b);
        }
        for (std::size_t b : up) {
            bool between = false;
            for (std::size_t c : up) {
                if (c != b && le_[c][b] && !le_[b][c]) { between = true; break; }
            }
            cover_[a][b] = between ? 0 : 1;
        }
    }
}

std::vector<std::size_t> CubePoset::covered(std::size_t b) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < size(); ++a) {
        if (cover_[a][b]) out.push_back(a);
    }
    return out;
}

CubePoset::Check CubePoset::check() const {
    Check c;
    const std::size_t n = size();
    for (std::size_t a = 0; a < n; ++a) {
        if (!le_[a][a]) c.reflexive = false;
        if (ranks_[a] < 0) c.rank_nonnegative = false;
        bool comparable = false;
        for (std::size_t b = 0; b < n; ++b) {
            if (ranks_[b] == 0 && (le_[a][b] || le_[b][a])) comparable = true;
            if (a == b || !le_[a][b]) continue;
            if (le_[b][a]) c.antisymmetric = false;
            if (!(ranks_[a] > ranks_[b])) c.rank_compatible = false;
            if (cover_[a][b] && ranks_[a] != ranks_[b] + 1) c.rank_consistent = false;
            for (std::size_t d = 0; d < n; ++d) {
                if (le_[b][d] && !le_[a][d]) c.transitive = false;
            }
        }
        if (!comparable) c.comparable_to_rank_zero = false;
    }
    return c;
}

}  // namespace sparselab
