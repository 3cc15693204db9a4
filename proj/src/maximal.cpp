#include "sparselab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sparselab/error.hpp"
#include "sparselab/parallel.hpp"

namespace sparselab {

namespace raw {

namespace {

double root(double s, double p) { return p == 1 ? s : std::pow(s, 1.0 / p); }

std::vector<double> powered(const std::vector<double>& a, double p) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = p == 1 ? a[i] : std::pow(a[i], p);
    return out;
}

// Fenwick tree over value ranks holding counts and sums.
struct Fenwick {
    std::vector<long double> sum;
    std::vector<std::int64_t> cnt;
    explicit Fenwick(std::size_t n) : sum(n + 1, 0), cnt(n + 1, 0) {}
    void add(std::size_t r, long double v, int c) {
        for (std::size_t i = r + 1; i < sum.size(); i += i & (~i + 1)) {
            sum[i] += v;
            cnt[i] += c;
        }
    }
    // totals over ranks [0, r)
    std::pair<long double, std::int64_t> prefix(std::size_t r) const {
        long double s = 0;
        std::int64_t c = 0;
        for (std::size_t i = r; i > 0; i -= i & (~i + 1)) {
            s += sum[i];
            c += cnt[i];
        }
        return {s, c};
    }
};

// For window start i0 with values osc[0..len), fold suffix maxima into out[i0..].
void fold_suffix(std::vector<double>& out, std::size_t i0, const std::vector<double>& osc, std::size_t len) {
    double best = 0;
    for (std::size_t t = len; t-- > 0;) {
        best = std::max(best, osc[t]);
        out[i0 + t] = std::max(out[i0 + t], best);
    }
}

// Separable sliding max: out[i][j] = max(out[i][j], max A[a][b]) over positions
// a ∈ [i-s+1, i], b ∈ [j-s+1, j] with A of shape (n0-s+1) x (n1-s+1).
void fold_square(std::vector<double>& out, std::size_t n0, std::size_t n1, std::size_t s, const std::vector<double>& A) {
    const std::size_t p0 = n0 - s + 1, p1 = n1 - s + 1;
    std::vector<double> row(p0 * n1, 0);
    for (std::size_t a = 0; a < p0; ++a)
        for (std::size_t j = 0; j < n1; ++j) {
            const std::size_t lo = j + 1 >= s ? j + 1 - s : 0, hi = std::min(j, p1 - 1);
            double m = 0;
            for (std::size_t b = lo; b <= hi; ++b) m = std::max(m, A[a * p1 + b]);
            row[a * n1 + j] = m;
        }
    for (std::size_t i = 0; i < n0; ++i) {
        const std::size_t lo = i + 1 >= s ? i + 1 - s : 0, hi = std::min(i, p0 - 1);
        for (std::size_t j = 0; j < n1; ++j) {
            double m = 0;
            for (std::size_t a = lo; a <= hi; ++a) m = std::max(m, row[a * n1 + j]);
            out[i * n1 + j] = std::max(out[i * n1 + j], m);
        }
    }
}

template <class T>
std::vector<T> summed_area(const std::vector<T>& v, std::size_t n0, std::size_t n1) {
    std::vector<T> s((n0 + 1) * (n1 + 1), T(0));
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j)
            s[(i + 1) * (n1 + 1) + j + 1] =
                v[i * n1 + j] + s[i * (n1 + 1) + j + 1] + s[(i + 1) * (n1 + 1) + j] - s[i * (n1 + 1) + j];
    return s;
}

template <class T>
T box_sum(const std::vector<T>& s, std::size_t n1, std::size_t a, std::size_t b, std::size_t side) {
    const std::size_t w = n1 + 1;
    return s[(a + side) * w + b + side] - s[a * w + b + side] - s[(a + side) * w + b] + s[a * w + b];
}

// Offsets (in cells) of one centre parity class grouped into shells of equal
// distance. Centre at (c0 + q0/2, c1 + q1/2) relative to cell (c0, c1) corner.
struct Shells {
    std::vector<std::vector<std::pair<int, int>>> cells;  // offsets from the base cell
    std::vector<double> radius;                           // maxdist + 1/2, in cells
};

Shells make_shells(int q0, int q1, double max_radius) {
    // cell (i, j) has centre (i + 1/2, j + 1/2); centre point (q0/2, q1/2)
    std::map<int, std::vector<std::pair<int, int>>> by_d;
    const int R = static_cast<int>(std::ceil(max_radius)) + 2;
    for (int i = -R; i <= R; ++i)
        for (int j = -R; j <= R; ++j) {
            const int d0 = 2 * i + 1 - q0, d1 = 2 * j + 1 - q1;  // doubled offsets
            const int d2 = d0 * d0 + d1 * d1;
            if (std::sqrt(d2) / 2 + 0.5 <= max_radius + 1e-9) by_d[d2].push_back({i, j});
        }
    Shells sh;
    for (auto& [d2, v] : by_d) {
        sh.cells.push_back(std::move(v));
        sh.radius.push_back(std::sqrt(d2) / 2 + 0.5);
    }
    return sh;
}

template <class Body>
void for_each_ball(std::size_t n0, std::size_t n1, double max_radius, Body&& body) {
    for (int q0 = 0; q0 < 2; ++q0)
        for (int q1 = 0; q1 < 2; ++q1) {
            const Shells sh = make_shells(q0, q1, max_radius);
            for (std::size_t c0 = 0; c0 < n0 + q0; ++c0)
                for (std::size_t c1 = 0; c1 < n1 + q1; ++c1) {
                    // grow shells until one leaves the grid
                    std::vector<std::vector<std::size_t>> shells;
                    for (const auto& shell : sh.cells) {
                        std::vector<std::size_t> idx;
                        bool inside = true;
                        for (auto [di, dj] : shell) {
                            const long i = static_cast<long>(c0) + di, j = static_cast<long>(c1) + dj;
                            if (i < 0 || j < 0 || i >= static_cast<long>(n0) || j >= static_cast<long>(n1)) {
                                inside = false;
                                break;
                            }
                            idx.push_back(static_cast<std::size_t>(i) * n1 + static_cast<std::size_t>(j));
                        }
                        if (!inside) break;
                        shells.push_back(std::move(idx));
                    }
                    if (!shells.empty()) body(shells, sh.radius);
                }
        }
}

}  // namespace

std::vector<double> maximal_1d(const std::vector<double>& absval, double p, std::size_t max_len) {
    const std::size_t N = absval.size();
    const std::vector<double> v = powered(absval, p);
    std::vector<double> out(N, 0), avg(N);
    for (std::size_t i0 = 0; i0 < N; ++i0) {
        const std::size_t len = std::min(max_len, N - i0);
        double acc = 0;
        for (std::size_t t = 0; t < len; ++t) {
            acc += v[i0 + t];
            avg[t] = acc / static_cast<double>(t + 1);
        }
        fold_suffix(out, i0, avg, len);
    }
    for (double& x : out) x = root(x, p);
    return out;
}

std::vector<std::vector<double>> sharp_1d(const std::vector<double>& v, const std::vector<std::size_t>& max_lens) {
    const std::size_t N = v.size();
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::size_t> rank(N);
    for (std::size_t i = 0; i < N; ++i)
        rank[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v[i]) - sorted.begin());

    std::size_t longest = 0;
    for (auto L : max_lens) longest = std::max(longest, std::min(L, N));
    std::vector<std::vector<double>> out(max_lens.size(), std::vector<double>(N, 0));
    Fenwick fw(sorted.size());
    std::vector<double> osc(N);
    for (std::size_t i0 = 0; i0 < N; ++i0) {
        const std::size_t len = std::min(longest, N - i0);
        long double S = 0;
        for (std::size_t t = 0; t < len; ++t) {
            const std::size_t i = i0 + t;
            fw.add(rank[i], v[i], 1);
            S += v[i];
            const long double cnt = static_cast<long double>(t + 1);
            const long double mu = S / cnt;
            const auto pos = static_cast<std::size_t>(
                std::upper_bound(sorted.begin(), sorted.end(), static_cast<double>(mu)) - sorted.begin());
            const auto [sb, cb] = fw.prefix(pos);
            const long double dev = (S - 2 * sb) - mu * (cnt - 2 * static_cast<long double>(cb));
            osc[t] = std::max(0.0, static_cast<double>(dev / cnt));
        }
        for (std::size_t c = 0; c < max_lens.size(); ++c) fold_suffix(out[c], i0, osc, std::min(len, max_lens[c]));
        for (std::size_t t = 0; t < len; ++t) fw.add(rank[i0 + t], -v[i0 + t], -1);
    }
    return out;
}

std::vector<std::vector<double>> sharp_1d_complex(const std::vector<cplx>& v, const std::vector<std::size_t>& max_lens) {
    const std::size_t N = v.size();
    std::size_t longest = 0;
    for (auto L : max_lens) longest = std::max(longest, std::min(L, N));
    std::vector<std::vector<double>> out(max_lens.size(), std::vector<double>(N, 0));
    std::vector<double> osc(N);
    for (std::size_t i0 = 0; i0 < N; ++i0) {
        const std::size_t len = std::min(longest, N - i0);
        cplx S = 0;
        for (std::size_t t = 0; t < len; ++t) {
            S += v[i0 + t];
            const cplx mu = S / static_cast<double>(t + 1);
            double d = 0;
            for (std::size_t u = 0; u <= t; ++u) d += std::abs(v[i0 + u] - mu);
            osc[t] = d / static_cast<double>(t + 1);
        }
        for (std::size_t c = 0; c < max_lens.size(); ++c) fold_suffix(out[c], i0, osc, std::min(len, max_lens[c]));
    }
    return out;
}

std::vector<double> maximal_squares(const std::vector<double>& absval, std::size_t n0, std::size_t n1, double p,
                                    std::size_t max_side) {
    const std::vector<double> v = powered(absval, p);
    const std::vector<long double> sat = summed_area(std::vector<long double>(v.begin(), v.end()), n0, n1);
    std::vector<double> out(n0 * n1, 0);
    const std::size_t top = std::min({max_side, n0, n1});
    for (std::size_t s = 1; s <= top; ++s) {
        const std::size_t p0 = n0 - s + 1, p1 = n1 - s + 1;
        std::vector<double> A(p0 * p1);
        const long double area = static_cast<long double>(s * s);
        for (std::size_t a = 0; a < p0; ++a)
            for (std::size_t b = 0; b < p1; ++b)
                A[a * p1 + b] = std::max(0.0, static_cast<double>(box_sum(sat, n1, a, b, s) / area));
        fold_square(out, n0, n1, s, A);
    }
    for (double& x : out) x = root(x, p);
    return out;
}

std::vector<std::vector<double>> sharp_squares(const std::vector<cplx>& v, std::size_t n0, std::size_t n1,
                                               const std::vector<std::size_t>& max_sides) {
    const std::vector<cplx> sat = summed_area(v, n0, n1);
    std::vector<std::vector<double>> out(max_sides.size(), std::vector<double>(n0 * n1, 0));
    std::size_t top = 0;
    for (auto s : max_sides) top = std::max(top, std::min({s, n0, n1}));
    for (std::size_t s = 1; s <= top; ++s) {
        const std::size_t p0 = n0 - s + 1, p1 = n1 - s + 1;
        std::vector<double> A(p0 * p1);
        parallel_for(p0, [&](std::size_t a) {
            for (std::size_t b = 0; b < p1; ++b) {
                const cplx mu = box_sum(sat, n1, a, b, s) / static_cast<double>(s * s);
                double d = 0;
                for (std::size_t i = a; i < a + s; ++i)
                    for (std::size_t j = b; j < b + s; ++j) d += std::abs(v[i * n1 + j] - mu);
                A[a * p1 + b] = d / static_cast<double>(s * s);
            }
        });
        for (std::size_t c = 0; c < max_sides.size(); ++c)
            if (s <= max_sides[c]) fold_square(out[c], n0, n1, s, A);
    }
    return out;
}

std::vector<double> maximal_balls(const std::vector<double>& absval, std::size_t n0, std::size_t n1, double p,
                                  double max_radius_cells) {
    const std::vector<double> v = powered(absval, p);
    std::vector<double> out(n0 * n1, 0);
    for_each_ball(n0, n1, max_radius_cells, [&](const std::vector<std::vector<std::size_t>>& shells,
                                               const std::vector<double>&) {
        std::vector<double> avg(shells.size());
        double acc = 0;
        std::size_t cnt = 0;
        for (std::size_t k = 0; k < shells.size(); ++k) {
            for (auto i : shells[k]) acc += v[i];
            cnt += shells[k].size();
            avg[k] = acc / static_cast<double>(cnt);
        }
        double best = 0;
        for (std::size_t k = shells.size(); k-- > 0;) {
            best = std::max(best, avg[k]);
            for (auto i : shells[k]) out[i] = std::max(out[i], best);
        }
    });
    for (double& x : out) x = root(x, p);
    return out;
}

std::vector<std::vector<double>> sharp_balls(const std::vector<cplx>& v, std::size_t n0, std::size_t n1,
                                             const std::vector<double>& max_radius_cells) {
    double top = 0;
    for (double r : max_radius_cells) top = std::max(top, r);
    std::vector<std::vector<double>> out(max_radius_cells.size(), std::vector<double>(n0 * n1, 0));
    for_each_ball(n0, n1, top, [&](const std::vector<std::vector<std::size_t>>& shells, const std::vector<double>& radius) {
        std::vector<double> osc(shells.size());
        std::vector<std::size_t> members;
        cplx S = 0;
        for (std::size_t k = 0; k < shells.size(); ++k) {
            for (auto i : shells[k]) {
                S += v[i];
                members.push_back(i);
            }
            const cplx mu = S / static_cast<double>(members.size());
            double d = 0;
            for (auto i : members) d += std::abs(v[i] - mu);
            osc[k] = d / static_cast<double>(members.size());
        }
        for (std::size_t c = 0; c < max_radius_cells.size(); ++c) {
            double best = 0;
            for (std::size_t k = shells.size(); k-- > 0;) {
                if (radius[k] > max_radius_cells[c] + 1e-9) continue;
                best = std::max(best, osc[k]);
                for (auto i : shells[k]) out[c][i] = std::max(out[c][i], best);
            }
        }
    });
    return out;
}

}  // namespace raw

namespace {

std::size_t cap_cells(const GridSpec& spec, std::optional<double> cap) {
    const std::size_t N = static_cast<std::size_t>(spec.N());
    if (!cap || std::isinf(*cap)) return N;
    if (!(*cap >= spec.h())) throw Error("radius cap below grid spacing");
    return std::min(N, static_cast<std::size_t>(std::floor(2 * *cap / spec.h() + 1e-9)));
}

double cap_radius_cells(const GridSpec& spec, std::optional<double> cap) {
    const double N = static_cast<double>(spec.N());
    if (!cap || std::isinf(*cap)) return N;
    if (!(*cap >= spec.h())) throw Error("radius cap below grid spacing");
    return std::min(N, *cap / spec.h());
}

GridFunction wrap(const GridSpec& spec, const std::vector<double>& v) {
    GridFunction g(spec);
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = v[i];
    return g;
}

}  // namespace

GridFunction maximal_p(const GridFunction& f, const MaximalConfig& cfg) {
    if (!(cfg.p >= 1) || std::isinf(cfg.p)) throw Error("maximal exponent must satisfy 1 <= p < inf");
    const GridSpec& spec = f.spec();
    std::vector<double> a(f.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(f[i]);
    const auto N = static_cast<std::size_t>(spec.N());
    if (spec.n == 1) return wrap(spec, raw::maximal_1d(a, cfg.p, cap_cells(spec, cfg.radius_cap)));
    if (cfg.shape == Shape::cube) return wrap(spec, raw::maximal_squares(a, N, N, cfg.p, cap_cells(spec, cfg.radius_cap)));
    return wrap(spec, raw::maximal_balls(a, N, N, cfg.p, cap_radius_cells(spec, cfg.radius_cap)));
}

std::vector<GridFunction> sharp_maximal_caps(const GridFunction& f, const std::vector<double>& caps, Shape shape) {
    const GridSpec& spec = f.spec();
    const auto N = static_cast<std::size_t>(spec.N());
    std::vector<std::vector<double>> res;
    if (spec.n == 1 || shape == Shape::cube) {
        std::vector<std::size_t> lens;
        for (double c : caps) lens.push_back(cap_cells(spec, c));
        if (spec.n == 2) {
            res = raw::sharp_squares(f.samples(), N, N, lens);
        } else {
            // imaginary parts at rounding level are dropped so real data takes the fast path
            double im = 0;
            for (const auto& z : f.samples()) im = std::max(im, std::abs(z.imag()));
            if (im <= 1e-13 * f.max_abs()) {
                std::vector<double> re(f.size());
                for (std::size_t i = 0; i < re.size(); ++i) re[i] = f[i].real();
                res = raw::sharp_1d(re, lens);
            } else {
                res = raw::sharp_1d_complex(f.samples(), lens);
            }
        }
    } else {
        std::vector<double> radii;
        for (double c : caps) radii.push_back(cap_radius_cells(spec, c));
        res = raw::sharp_balls(f.samples(), N, N, radii);
    }
    std::vector<GridFunction> out;
    for (const auto& r : res) out.push_back(wrap(spec, r));
    return out;
}

GridFunction sharp_maximal(const GridFunction& f, std::optional<double> radius_cap, Shape shape) {
    return sharp_maximal_caps(f, {radius_cap.value_or(kInf)}, shape).front();
}

}  // namespace sparselab
