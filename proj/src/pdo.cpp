#include "sparselab/pdo.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "sparselab/error.hpp"
#include "sparselab/fft.hpp"
#include "sparselab/parallel.hpp"

namespace sparselab {

int default_J(const GridSpec& spec) {
    const double xi_max = std::numbers::pi * std::ldexp(1.0, spec.kappa) * std::sqrt(static_cast<double>(spec.n));
    int J = 0;
    while (std::ldexp(1.0, J - 1) < xi_max) ++J;
    return J;
}

double default_nu(double rho) { return std::clamp(rho - 0.05, 0.0, std::nextafter(1.0, 0.0)); }

double frequency(const GridSpec& spec, std::int64_t k) {
    return 2.0 * std::numbers::pi * static_cast<double>(signed_index(k, spec.N())) / spec.L();
}

std::vector<double> frequency_vector(const GridSpec& spec, std::size_t flat) {
    std::vector<double> xi(static_cast<std::size_t>(spec.n));
    const auto N = static_cast<std::size_t>(spec.N());
    for (std::size_t i = xi.size(); i-- > 0;) {
        xi[i] = frequency(spec, static_cast<std::int64_t>(flat % N));
        flat /= N;
    }
    return xi;
}

double piece_window(const PieceIndex& idx, double r) {
    const double jn = idx.j * idx.nu;
    if (idx.l == 0) return psi0_radial(r * std::exp2(jn - 1));
    return psi_radial(r * std::exp2(jn - idx.l));
}

std::pair<double, double> piece_window_support(const PieceIndex& idx) {
    const double jn = idx.j * idx.nu;
    if (idx.l == 0) return {0.0, std::exp2(1 - jn)};
    return {std::exp2(idx.l - jn - 1), std::exp2(idx.l - jn + 1)};
}

namespace {

std::string num_key(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Radial band_cut(int j) { return {[j](double r) { return psi_j_radial(j, r); }, "band" + std::to_string(j)}; }

Radial truncation_cut(int J) { return {[J](double r) { return psi0_radial(std::ldexp(r, -J)); }, "trunc" + std::to_string(J)}; }

Radial piece_window_radial(const PieceIndex& idx) {
    return {[idx](double r) { return piece_window(idx, r); },
            "piece" + std::to_string(idx.j) + ":" + std::to_string(idx.l) + ":" + num_key(idx.nu)};
}

Radial localization_window(int l1) { return {[l1](double r) { return psi0_radial(std::ldexp(r, -l1)); }, "loc" + std::to_string(l1)}; }

Radial telescoped_window(const PieceIndex& idx, int L) {
    const double jn = idx.j * idx.nu;
    return {[jn, L](double r) { return psi0_radial(r * std::exp2(jn - L - 1)); },
            "tele" + std::to_string(idx.j) + ":" + std::to_string(L) + ":" + num_key(idx.nu)};
}

std::vector<std::int64_t> min_image(const GridSpec& spec, std::size_t flat) {
    std::vector<std::int64_t> d(static_cast<std::size_t>(spec.n));
    const auto N = static_cast<std::size_t>(spec.N());
    for (std::size_t i = d.size(); i-- > 0;) {
        d[i] = signed_index(static_cast<std::int64_t>(flat % N), spec.N());
        flat /= N;
    }
    return d;
}

double offset_norm(const GridSpec& spec, const std::vector<std::int64_t>& d) {
    double s = 0;
    for (auto v : d) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s) * spec.h();
}

namespace {

void check_support(const GridFunction& f, const ApplyOptions& opt) {
    if (!opt.check_support) return;
    const auto sb = f.support_box();
    if (sb && !f.spec().central_half().contains(*sb)) throw Error("wraparound risk");
}

std::vector<cplx> roots(std::int64_t N) {
    std::vector<cplx> w(static_cast<std::size_t>(N));
    for (std::int64_t t = 0; t < N; ++t) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(N);
        w[static_cast<std::size_t>(t)] = cplx(std::cos(ang), std::sin(ang));
    }
    return w;
}

std::string spec_key(const GridSpec& s) {
    return std::to_string(s.n) + "/" + std::to_string(s.K) + "/" + std::to_string(s.kappa);
}

struct Row {
    std::vector<cplx> row;  // windowed kernel over offsets, DFT order
    std::vector<cplx> hat;  // its forward DFT
};

std::mutex cache_mutex;
std::map<std::string, std::shared_ptr<const Row>> cache;
std::size_t cache_elems = 0;
constexpr std::size_t cache_cap = std::size_t{1} << 23;

// Kernel row over offsets d: (1/L^n) Σ_k m(ξ_k) e^{2πi k·d/N}, times W(|z_d|).
std::shared_ptr<const Row> build_row(const GridSpec& spec, const std::function<cplx(std::span<const double>)>& mult,
                                     const Radial& cut, const Radial& window) {
    auto r = std::make_shared<Row>();
    const std::size_t total = spec.size();
    r->row.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        const auto xi = frequency_vector(spec, k);
        cplx v = mult(xi);
        if (cut) v *= cut.fn(norm2(xi));
        r->row[k] = v;
    }
    dft(r->row, spec.n, spec.N(), false);
    const double scale = 1.0 / std::pow(spec.L(), spec.n);
    for (std::size_t d = 0; d < total; ++d) {
        r->row[d] *= scale;
        if (window) r->row[d] *= window.fn(offset_norm(spec, min_image(spec, d)));
    }
    r->hat = r->row;
    dft(r->hat, spec.n, spec.N(), true);
    return r;
}

std::shared_ptr<const Row> cached_row(const std::string& key, const std::function<std::shared_ptr<const Row>()>& make) {
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto row = make();
    std::lock_guard<std::mutex> lock(cache_mutex);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    if (cache_elems + 2 * row->row.size() > cache_cap) {
        cache.clear();
        cache_elems = 0;
    }
    cache_elems += 2 * row->row.size();
    cache.emplace(key, row);
    return row;
}

std::shared_ptr<const Row> separable_row(const SymbolClass& a, const Radial& cut, const Radial& window, const GridSpec& spec) {
    const std::string key = std::to_string(a.id()) + "|" + cut.key + "|" + window.key + "|" + spec_key(spec);
    return cached_row(key, [&] {
        return build_row(spec, [&a](std::span<const double> xi) { return a.xi_factor(xi); }, cut, window);
    });
}

std::shared_ptr<const Row> point_row(const SymbolClass& a, const Radial& cut, const Radial& window, const GridSpec& spec,
                                     std::size_t x) {
    const std::string key = std::to_string(a.id()) + "|" + cut.key + "|" + window.key + "|" + spec_key(spec) + "|x" + std::to_string(x);
    const GridFunction probe(spec);
    const auto xp = probe.point(x);
    return cached_row(key, [&] {
        return build_row(spec, [&a, &xp](std::span<const double> xi) { return a(xp, xi); }, cut, window);
    });
}

// (i - i') mod N per axis, flattened.
std::size_t offset_flat(const GridSpec& spec, std::size_t i, std::size_t ip) {
    const auto N = static_cast<std::size_t>(spec.N());
    if (spec.n == 1) return (i + N - ip) % N;
    const std::size_t a0 = i / N, a1 = i % N, b0 = ip / N, b1 = ip % N;
    return ((a0 + N - b0) % N) * N + (a1 + N - b1) % N;
}

GridFunction multiply_x(const SymbolClass& a, GridFunction g) {
    if (a.x_independent()) return g;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= a.x_factor(g.point(i));
    return g;
}

}  // namespace

GridFunction apply_cut(const SymbolClass& a, const Radial& cut, const GridFunction& f, const ApplyOptions& opt) {
    check_support(f, opt);
    const GridSpec& spec = f.spec();
    const std::size_t total = spec.size();
    std::vector<cplx> F = f.samples();
    dft(F, spec.n, spec.N(), true);
    const double inv = 1.0 / static_cast<double>(total);

    if (a.separable() && !opt.force_direct) {
        for (std::size_t k = 0; k < total; ++k) {
            const auto xi = frequency_vector(spec, k);
            cplx m = a.xi_factor(xi);
            if (cut) m *= cut.fn(norm2(xi));
            F[k] *= m * inv;
        }
        dft(F, spec.n, spec.N(), false);
        return multiply_x(a, GridFunction(spec, std::move(F)));
    }

    // direct summation over the frequencies carrying nonzero weight
    struct Term {
        std::vector<double> xi;
        std::vector<std::int64_t> k;
        cplx w;
    };
    std::vector<Term> terms;
    const auto N = spec.N();
    for (std::size_t k = 0; k < total; ++k) {
        auto xi = frequency_vector(spec, k);
        const double c = cut ? cut.fn(norm2(xi)) : 1.0;
        if (c == 0 || F[k] == cplx(0)) continue;
        std::vector<std::int64_t> kk(static_cast<std::size_t>(spec.n));
        std::size_t fl = k;
        for (std::size_t d = kk.size(); d-- > 0;) {
            kk[d] = static_cast<std::int64_t>(fl % static_cast<std::size_t>(N));
            fl /= static_cast<std::size_t>(N);
        }
        terms.push_back({std::move(xi), std::move(kk), F[k] * c});
    }
    const auto w = roots(N);
    GridFunction out(spec);
    parallel_for(total, [&](std::size_t i) {
        const auto x = out.point(i);
        const auto idx = out.index(i);
        cplx s(0);
        for (const Term& t : terms) {
            std::int64_t ph = 0;
            for (std::size_t d = 0; d < idx.size(); ++d) ph += t.k[d] * idx[d];
            s += a(x, t.xi) * t.w * w[static_cast<std::size_t>(ph % N)];
        }
        out[i] = s * inv;
    });
    return out;
}

GridFunction apply(const SymbolClass& a, const GridFunction& f, const ApplyOptions& opt) { return apply_cut(a, Radial{}, f, opt); }

GridFunction lp_piece_apply(const SymbolClass& a, int j, const GridFunction& f, const ApplyOptions& opt) {
    if (j < 0) throw Error("band index must be nonnegative");
    return apply_cut(a, band_cut(j), f, opt);
}

GridFunction apply_windowed(const SymbolClass& a, const Radial& cut, const Radial& window, const GridFunction& f,
                            const ApplyOptions& opt) {
    check_support(f, opt);
    const GridSpec& spec = f.spec();
    const std::size_t total = spec.size();
    const double hn = std::pow(spec.h(), spec.n);
    if (a.separable() && !opt.force_direct) {
        const auto row = separable_row(a, cut, window, spec);
        std::vector<cplx> F = f.samples();
        dft(F, spec.n, spec.N(), true);
        const double inv = hn / static_cast<double>(total);
        for (std::size_t k = 0; k < total; ++k) F[k] *= row->hat[k] * inv;
        dft(F, spec.n, spec.N(), false);
        return multiply_x(a, GridFunction(spec, std::move(F)));
    }
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < total; ++i) {
        if (f[i] != cplx(0)) nz.push_back(i);
    }
    GridFunction out(spec);
    parallel_for(total, [&](std::size_t i) {
        const auto xp = out.point(i);
        const auto row = build_row(spec, [&](std::span<const double> xi) { return a(xp, xi); }, cut, window);
        cplx s(0);
        for (std::size_t ip : nz) s += row->row[offset_flat(spec, i, ip)] * f[ip];
        out[i] = s * hn;
    });
    return out;
}

GridFunction spatial_piece_apply(const SymbolClass& a, const PieceIndex& idx, const GridFunction& f, const ApplyOptions& opt) {
    if (idx.j < 0 || idx.l < 0) throw Error("piece indices must be nonnegative");
    if (idx.nu < 0 || idx.nu >= 1) throw Error("nu must lie in [0,1)");
    return apply_windowed(a, band_cut(idx.j), piece_window_radial(idx), f, opt);
}

GridFunction apply_localized(const LocalizedAmplitude& a, const GridFunction& f, const ApplyOptions& opt) {
    if (a.l1 < 0) throw Error("localization exponent must be nonnegative");
    return apply_windowed(a.base, truncation_cut(default_J(f.spec())), localization_window(a.l1), f, opt);
}

KernelSlice kernel_slice(const SymbolClass& a, const Radial& cut, const Radial& window, std::size_t x, const GridSpec& spec) {
    KernelSlice s{spec, x, std::vector<cplx>(spec.size())};
    std::shared_ptr<const Row> row;
    cplx b(1);
    if (a.separable()) {
        row = separable_row(a, cut, window, spec);
        b = a.x_factor(GridFunction(spec).point(x));
    } else {
        row = point_row(a, cut, window, spec, x);
    }
    for (std::size_t y = 0; y < spec.size(); ++y) s.values[y] = b * row->row[offset_flat(spec, x, y)];
    return s;
}

KernelSlice kernel_slice(const SymbolClass& a, const PieceIndex& idx, std::size_t x, const GridSpec& spec) {
    return kernel_slice(a, band_cut(idx.j), piece_window_radial(idx), x, spec);
}

cplx KernelSlice::at_offset(const std::vector<std::int64_t>& d) const {
    const auto N = spec.N();
    const GridFunction probe(spec);
    const auto xi = probe.index(x);
    std::vector<std::int64_t> y(xi.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = ((xi[i] - d[i]) % N + N) % N;
    return values[probe.flat(y)];
}

cplx KernelSlice::mass() const {
    cplx s(0);
    for (const cplx& v : values) s += v;
    return s * std::pow(spec.h(), spec.n);
}

double KernelSlice::sup() const {
    double m = 0;
    for (const cplx& v : values) m = std::max(m, std::abs(v));
    return m;
}

void clear_kernel_cache() {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.clear();
    cache_elems = 0;
}

std::size_t kernel_cache_size() {
    std::lock_guard<std::mutex> lock(cache_mutex);
    return cache.size();
}

}  // namespace sparselab
