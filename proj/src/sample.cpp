#include "sparselab/sample.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sparselab/error.hpp"
#include "sparselab/rng.hpp"

namespace sparselab {

std::size_t GridSpec::size() const {
    std::size_t s = 1;
    for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(N());
    return s;
}

double GridSpec::h() const { return std::ldexp(1.0, -kappa); }
double GridSpec::L() const { return std::ldexp(1.0, K + 1); }
double GridSpec::half() const { return std::ldexp(1.0, K); }

CellLattice GridSpec::lattice() const { return CellLattice{static_cast<std::size_t>(n), origin(), spacing(), N()}; }

Box GridSpec::domain() const { return lattice().domain(); }

Box GridSpec::central_half() const {
    Box b;
    for (int i = 0; i < n; ++i) {
        b.lower.push_back(-Rational::pow2(K - 1));
        b.upper.push_back(Rational::pow2(K - 1));
    }
    return b;
}

void GridSpec::validate() const {
    if (n < 1 || n > 2) throw Error("dimension must be 1 or 2");
    if (K < 1 || kappa < 0) throw Error("grid exponents out of range");
    if (K + kappa + 1 > 24) throw Error("grid too large");
}

GridFunction::GridFunction(GridSpec spec) : spec_(spec), samples_(spec.size(), cplx(0)) {}

GridFunction::GridFunction(GridSpec spec, std::vector<cplx> samples) : spec_(spec), samples_(std::move(samples)) {
    if (samples_.size() != spec_.size()) throw Error("sample count does not match grid");
}

std::size_t GridFunction::flat(const std::vector<std::int64_t>& idx) const {
    std::size_t f = 0;
    for (auto v : idx) f = f * static_cast<std::size_t>(spec_.N()) + static_cast<std::size_t>(v);
    return f;
}

std::vector<std::int64_t> GridFunction::index(std::size_t flat) const {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(spec_.n));
    const auto N = static_cast<std::size_t>(spec_.N());
    for (std::size_t i = idx.size(); i-- > 0;) {
        idx[i] = static_cast<std::int64_t>(flat % N);
        flat /= N;
    }
    return idx;
}

std::vector<double> GridFunction::point(std::size_t flat) const {
    std::vector<double> x;
    for (auto v : index(flat)) x.push_back(spec_.coord(v));
    return x;
}

bool GridFunction::finite() const {
    for (const cplx& v : samples_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

bool GridFunction::is_zero() const {
    for (const cplx& v : samples_) {
        if (v != cplx(0)) return false;
    }
    return true;
}

double GridFunction::max_abs() const {
    double m = 0;
    for (const cplx& v : samples_) m = std::max(m, std::abs(v));
    return m;
}

std::optional<CellRange> GridFunction::support_cells() const {
    CellRange r(static_cast<std::size_t>(spec_.n), {spec_.N(), -1});
    bool any = false;
    for (std::size_t f = 0; f < samples_.size(); ++f) {
        if (samples_[f] == cplx(0)) continue;
        any = true;
        const auto idx = index(f);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            r[i].first = std::min(r[i].first, idx[i]);
            r[i].second = std::max(r[i].second, idx[i] + 1);
        }
    }
    if (!any) return std::nullopt;
    return r;
}

std::optional<Box> GridFunction::support_box() const {
    const auto r = support_cells();
    if (!r) return std::nullopt;
    Box b;
    for (const auto& [lo, hi] : *r) {
        b.lower.push_back(spec_.origin() + spec_.spacing() * Rational(lo));
        b.upper.push_back(spec_.origin() + spec_.spacing() * Rational(hi));
    }
    return b;
}

GridFunction GridFunction::abs() const {
    GridFunction out(spec_);
    for (std::size_t i = 0; i < samples_.size(); ++i) out.samples_[i] = std::abs(samples_[i]);
    return out;
}

GridFunction GridFunction::restricted(const Box& b) const {
    GridFunction out(spec_);
    const CellRange r = cell_range(spec_, b);
    const auto N = spec_.N();
    if (spec_.n == 1) {
        for (auto i = std::max<std::int64_t>(0, r[0].first); i < std::min(N, r[0].second); ++i) {
            out.samples_[static_cast<std::size_t>(i)] = samples_[static_cast<std::size_t>(i)];
        }
        return out;
    }
    for (std::size_t f = 0; f < samples_.size(); ++f) {
        const auto idx = index(f);
        bool in = true;
        for (std::size_t i = 0; i < idx.size(); ++i) in = in && idx[i] >= r[i].first && idx[i] < r[i].second;
        if (in) out.samples_[f] = samples_[f];
    }
    return out;
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
    if (!(o.spec_ == spec_)) throw Error("grid mismatch");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] += o.samples_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
    if (!(o.spec_ == spec_)) throw Error("grid mismatch");
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i] -= o.samples_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(cplx c) {
    for (cplx& v : samples_) v *= c;
    return *this;
}

cplx inner(const GridFunction& f, const GridFunction& g) {
    if (!(f.spec() == g.spec())) throw Error("grid mismatch");
    cplx s(0);
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::conj(g[i]);
    return s * std::pow(f.spec().h(), f.spec().n);
}

double lp_norm(const GridFunction& f, double p) {
    if (std::isinf(p)) return f.max_abs();
    long double s = 0;
    for (const cplx& v : f.samples()) s += std::pow(static_cast<long double>(std::abs(v)), p);
    return static_cast<double>(std::pow(s * std::pow(static_cast<long double>(f.spec().h()), f.spec().n), 1.0L / p));
}

double max_abs_diff(const GridFunction& a, const GridFunction& b) {
    if (!(a.spec() == b.spec())) throw Error("grid mismatch");
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double conjugate(double p) {
    if (std::isinf(p)) return 1;
    if (p == 1) return kInf;
    return p / (p - 1);
}

double ExponentPair::s_prime() const { return conjugate(s); }
double ExponentPair::r_prime() const { return conjugate(r); }

double ExponentPair::schur_p() const {
    const double inv = 1.0 / s + 1.0 - 1.0 / r;
    return 1.0 / inv;
}

void ExponentPair::validate() const {
    if (!(r >= 1)) throw Error("exponent r must be at least 1");
    if (!(r <= s)) throw Error("exponents violate r ≤ s");
}

CellRange cell_range(const GridSpec& spec, const Box& b) { return spec.lattice().midpoint_range(b); }

namespace {

void check_cube(const GridSpec& spec, const Box& q) {
    for (std::size_t i = 0; i < q.dim(); ++i) {
        if (q.side(i) < spec.spacing()) throw Error("subgrid cube");
    }
}

std::size_t range_count(const CellRange& r) {
    std::size_t c = 1;
    for (const auto& [lo, hi] : r) c *= static_cast<std::size_t>(std::max<std::int64_t>(0, hi - lo));
    return c;
}

CellRange clip(const CellRange& r, std::int64_t N) {
    CellRange c = r;
    for (auto& [lo, hi] : c) {
        lo = std::clamp<std::int64_t>(lo, 0, N);
        hi = std::clamp<std::int64_t>(hi, 0, N);
        if (hi < lo) hi = lo;
    }
    return c;
}

}  // namespace

double average_p(const GridFunction& f, const Box& q, double p) {
    if (!(p >= 1)) throw Error("average exponent must be at least 1");
    check_cube(f.spec(), q);
    const CellRange r = cell_range(f.spec(), q);
    const std::size_t count = range_count(r);
    const CellRange c = clip(r, f.spec().N());
    const auto N = static_cast<std::size_t>(f.spec().N());
    double mx = 0;
    long double s = 0;
    auto visit = [&](std::size_t flat) {
        const double a = std::abs(f[flat]);
        if (a == 0) return;
        if (std::isinf(p)) mx = std::max(mx, a);
        else s += std::pow(static_cast<long double>(a), p);
    };
    if (f.spec().n == 1) {
        for (auto i = c[0].first; i < c[0].second; ++i) visit(static_cast<std::size_t>(i));
    } else {
        for (auto i = c[0].first; i < c[0].second; ++i) {
            for (auto j = c[1].first; j < c[1].second; ++j) visit(static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j));
        }
    }
    if (std::isinf(p)) return mx;
    if (s == 0) return 0;
    return static_cast<double>(std::pow(s / static_cast<long double>(count), 1.0L / p));
}

AverageTable::AverageTable(const GridFunction& f, double p) : f_(&f), p_(p), N_(f.spec().N()) {
    if (!(p >= 1)) throw Error("average exponent must be at least 1");
    const int n = f.spec().n;
    const auto M = static_cast<std::size_t>(N_ + 1);
    if (std::isinf(p)) return;
    auto val = [&](std::size_t flat) { return std::pow(static_cast<long double>(std::abs(f[flat])), p); };
    if (n == 1) {
        s_.assign(M, 0);
        nz_.assign(M, 0);
        for (std::size_t i = 0; i + 1 < M; ++i) {
            s_[i + 1] = s_[i] + val(i);
            nz_[i + 1] = nz_[i] + (f[i] != cplx(0) ? 1 : 0);
        }
        return;
    }
    s_.assign(M * M, 0);
    nz_.assign(M * M, 0);
    const auto N = static_cast<std::size_t>(N_);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t fl = i * N + j;
            s_[(i + 1) * M + j + 1] = val(fl) + s_[i * M + j + 1] + s_[(i + 1) * M + j] - s_[i * M + j];
            nz_[(i + 1) * M + j + 1] = (f[fl] != cplx(0) ? 1 : 0) + nz_[i * M + j + 1] + nz_[(i + 1) * M + j] - nz_[i * M + j];
        }
    }
}

long double AverageTable::sum(const CellRange& c, const std::vector<long double>& t) const {
    if (c.size() == 1) return t[static_cast<std::size_t>(c[0].second)] - t[static_cast<std::size_t>(c[0].first)];
    const auto M = static_cast<std::size_t>(N_ + 1);
    const auto a0 = static_cast<std::size_t>(c[0].first), a1 = static_cast<std::size_t>(c[0].second);
    const auto b0 = static_cast<std::size_t>(c[1].first), b1 = static_cast<std::size_t>(c[1].second);
    return t[a1 * M + b1] - t[a0 * M + b1] - t[a1 * M + b0] + t[a0 * M + b0];
}

double AverageTable::average(const Box& q) const {
    check_cube(f_->spec(), q);
    return average(cell_range(f_->spec(), q));
}

double AverageTable::average(const CellRange& r) const {
    const std::size_t count = range_count(r);
    if (count == 0) return 0;
    const CellRange c = clip(r, N_);
    if (std::isinf(p_)) {
        double mx = 0;
        const auto N = static_cast<std::size_t>(N_);
        if (c.size() == 1) {
            for (auto i = c[0].first; i < c[0].second; ++i) mx = std::max(mx, std::abs((*f_)[static_cast<std::size_t>(i)]));
        } else {
            for (auto i = c[0].first; i < c[0].second; ++i) {
                for (auto j = c[1].first; j < c[1].second; ++j) {
                    mx = std::max(mx, std::abs((*f_)[static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j)]));
                }
            }
        }
        return mx;
    }
    if (range_count(c) == 0 || sum(c, nz_) < 0.5L) return 0;
    const long double s = std::max(0.0L, sum(c, s_));
    return static_cast<double>(std::pow(s / static_cast<long double>(count), 1.0L / p_));
}

std::string corpus_kind(int i) {
    static const char* kinds[] = {"bump", "indicator", "comb", "noise"};
    return kinds[((i % 4) + 4) % 4];
}

namespace {

// Items are continuous recipes drawn from (n, K, seed, i) so the same function
// can be sampled at several resolutions.
struct Recipe {
    int kind = 0;
    double amp = 1;
    std::vector<double> center;
    double radius = 1;
    Box cube;
    double tooth = 1;
    std::vector<double> comb_origin;
    int teeth = 1;
    std::vector<double> signs;
    std::vector<std::vector<double>> freqs;
    std::vector<double> phases;
};

double bump_value(const std::vector<double>& x, const std::vector<double>& c, double rad) {
    double t2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) t2 += (x[i] - c[i]) * (x[i] - c[i]);
    t2 /= rad * rad;
    if (t2 >= 1) return 0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

Recipe draw_recipe(const GridSpec& spec, std::uint64_t seed, int i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(spec.n), static_cast<std::uint64_t>(spec.K), static_cast<std::uint64_t>(i)));
    Recipe r;
    r.kind = i % 4;
    const double R = std::ldexp(1.0, spec.K - 1);
    const int n = spec.n;
    r.amp = rng.uniform(0.5, 2.0);
    r.center.resize(static_cast<std::size_t>(n));
    for (auto& c : r.center) c = rng.uniform(-R / 2, R / 2);
    r.radius = rng.uniform(R / 8, R / 2);
    switch (r.kind) {
        case 1: {
            const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.K + 1))) + 1 - spec.K;  // side 2^{K-1} .. 1/2
            const int kk = std::min(k, spec.kappa);
            std::vector<int> omega(static_cast<std::size_t>(n));
            for (auto& w : omega) w = static_cast<int>(rng.below(3));
            const Box half = spec.central_half();
            std::vector<Rational> p(static_cast<std::size_t>(n));
            bool ok = false;
            for (int attempt = 0; attempt < 16; ++attempt) {
                for (auto& v : p) v = Rational(static_cast<std::int64_t>(rng.below(1u << 20)) - (1 << 19), 1 << 20) * Rational::pow2(spec.K);
                const Box b = cube_box(cube_containing(p, kk, omega));
                if (!ok && half.contains(b)) {
                    r.cube = b;
                    ok = true;
                }
            }
            if (!ok) r.cube = cube_box(DyadicCube{std::max(kk, 1 - spec.K), std::vector<std::int64_t>(static_cast<std::size_t>(n), 0),
                                                  std::vector<int>(static_cast<std::size_t>(n), 0)});
            break;
        }
        case 2: {
            const int t = static_cast<int>(rng.below(3));
            r.tooth = std::ldexp(1.0, -std::min(t, spec.kappa));
            r.teeth = 2 + static_cast<int>(rng.below(7));
            while (r.teeth * r.tooth > R) r.teeth /= 2;
            r.teeth = std::max(r.teeth, 1);
            r.comb_origin.resize(static_cast<std::size_t>(n));
            for (auto& o : r.comb_origin) {
                const double a = rng.uniform(-R, R - r.teeth * r.tooth);
                o = std::floor(a / r.tooth) * r.tooth;
            }
            std::size_t cells = 1;
            for (int d = 0; d < n; ++d) cells *= static_cast<std::size_t>(r.teeth);
            for (std::size_t c = 0; c < 64; ++c) {
                const double sgn = rng.below(2) ? 1.0 : -1.0;
                if (c < cells) r.signs.push_back(sgn);
            }
            break;
        }
        case 3: {
            for (int w = 0; w < 6; ++w) {
                std::vector<double> xi(static_cast<std::size_t>(n));
                for (auto& v : xi) v = rng.uniform(-8.0, 8.0);
                r.freqs.push_back(xi);
                r.phases.push_back(rng.uniform(0.0, 2 * std::numbers::pi));
            }
            break;
        }
        default:
            break;
    }
    return r;
}

GridFunction render(const GridSpec& spec, const Recipe& r) {
    GridFunction f(spec);
    if (r.kind == 1) {
        const CellRange cr = cell_range(spec, r.cube);
        for (std::size_t fl = 0; fl < f.size(); ++fl) {
            const auto idx = f.index(fl);
            bool in = true;
            for (std::size_t d = 0; d < idx.size(); ++d) in = in && idx[d] >= cr[d].first && idx[d] < cr[d].second;
            if (in) f[fl] = r.amp;
        }
        return f;
    }
    for (std::size_t fl = 0; fl < f.size(); ++fl) {
        const auto x = f.point(fl);
        double v = 0;
        switch (r.kind) {
            case 0: v = r.amp * bump_value(x, r.center, r.radius); break;
            case 2: {
                std::size_t cell = 0;
                bool in = true;
                for (std::size_t d = 0; d < x.size(); ++d) {
                    const double t = std::floor((x[d] - r.comb_origin[d]) / r.tooth);
                    if (t < 0 || t >= r.teeth) { in = false; break; }
                    cell = cell * static_cast<std::size_t>(r.teeth) + static_cast<std::size_t>(t);
                }
                if (in) v = r.amp * r.signs[cell];
                break;
            }
            case 3: {
                const double env = bump_value(x, r.center, r.radius);
                if (env == 0) break;
                double s = 0;
                for (std::size_t w = 0; w < r.freqs.size(); ++w) {
                    double ph = r.phases[w];
                    for (std::size_t d = 0; d < x.size(); ++d) ph += r.freqs[w][d] * x[d];
                    s += std::cos(ph);
                }
                v = r.amp * env * s / std::sqrt(static_cast<double>(r.freqs.size()));
                break;
            }
            default: break;
        }
        f[fl] = v;
    }
    return f;
}

}  // namespace

std::vector<GridFunction> make_corpus(const GridSpec& spec, std::uint64_t seed, int count) {
    spec.validate();
    if (count < 1) throw Error("corpus count must be at least 1");
    std::vector<GridFunction> out;
    for (int i = 0; i < count; ++i) out.push_back(render(spec, draw_recipe(spec, seed, i)));
    return out;
}

void write_binary(std::ostream& os, const GridFunction& f) {
    os << f.spec().n << ' ' << f.spec().K << ' ' << f.spec().kappa << '\n';
    for (const cplx& v : f.samples()) {
        const double re = v.real(), im = v.imag();
        os.write(reinterpret_cast<const char*>(&re), sizeof re);
        os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

GridFunction read_binary(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw Error("missing grid header");
    std::istringstream hs(header);
    GridSpec spec;
    if (!(hs >> spec.n >> spec.K >> spec.kappa)) throw Error("malformed grid header");
    spec.validate();
    std::vector<cplx> s(spec.size());
    for (cplx& v : s) {
        double re = 0, im = 0;
        is.read(reinterpret_cast<char*>(&re), sizeof re);
        is.read(reinterpret_cast<char*>(&im), sizeof im);
        if (!is) throw Error("truncated grid data");
        v = cplx(re, im);
    }
    return GridFunction(spec, std::move(s));
}

void write_binary(const std::string& path, const GridFunction& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path);
    write_binary(os, f);
}

GridFunction read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return read_binary(is);
}

}  // namespace sparselab
