#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sparselab/pdo.hpp"

using namespace sparselab;

namespace {

constexpr double kPi = std::numbers::pi;

GridFunction gaussian(const GridSpec& s, double width, double cut) {
    GridFunction f(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto x = f.point(i);
        double r2 = 0;
        for (double v : x) r2 += (v - 0.3) * (v - 0.3);
        if (std::sqrt(r2) < cut) f[i] = std::exp(-r2 / (width * width));
    }
    return f;
}

GridFunction plane_wave(const GridSpec& s, std::int64_t k) {
    GridFunction f(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = std::polar(1.0, 2 * kPi * static_cast<double>(k) * f.point(i)[0] / s.L());
    }
    return f;
}

// O(N^2) quadrature written against coordinates instead of indices.
GridFunction naive_apply(const SymbolClass& a, const GridFunction& f) {
    const GridSpec& s = f.spec();
    const auto N = s.N();
    GridFunction out(s);
    std::vector<cplx> fh(static_cast<std::size_t>(N));
    for (std::int64_t k = -N / 2; k < N / 2; ++k) {
        const double xi = 2 * kPi * static_cast<double>(k) / s.L();
        cplx acc(0);
        for (std::int64_t j = 0; j < N; ++j) acc += f[static_cast<std::size_t>(j)] * std::polar(1.0, -xi * s.coord(j));
        fh[static_cast<std::size_t>(k + N / 2)] = acc * s.h();
    }
    for (std::int64_t i = 0; i < N; ++i) {
        const std::vector<double> x{s.coord(i)};
        cplx acc(0);
        for (std::int64_t k = -N / 2; k < N / 2; ++k) {
            const std::vector<double> xi{2 * kPi * static_cast<double>(k) / s.L()};
            acc += a(x, xi) * fh[static_cast<std::size_t>(k + N / 2)] * std::polar(1.0, xi[0] * x[0]);
        }
        out[static_cast<std::size_t>(i)] = acc / s.L();
    }
    return out;
}

}  // namespace

TEST_CASE("J covers the grid spectrum") {
    for (int n = 1; n <= 2; ++n) {
        for (int kappa = 2; kappa <= 6; ++kappa) {
            const GridSpec s{n, 2, kappa};
            const int J = default_J(s);
            double xmax = 0;
            for (std::size_t k = 0; k < s.size(); ++k) xmax = std::max(xmax, norm2(frequency_vector(s, k)));
            CHECK(std::ldexp(1.0, J - 1) >= xmax);
            CHECK(std::ldexp(1.0, J - 2) < xmax);
        }
    }
    CHECK(default_J(GridSpec{1, 2, 5}) == 8);
    CHECK(default_J(GridSpec{2, 2, 5}) == 9);
    CHECK(default_nu(1) == doctest::Approx(0.95));
    CHECK(default_nu(0.02) == 0);
}

TEST_CASE("partition of unity on grid frequencies") {
    for (int n = 1; n <= 2; ++n) {
        const GridSpec s{n, 2, n == 1 ? 8 : 4};
        const int J = default_J(s);
        double worst = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double r = norm2(frequency_vector(s, k));
            double sum = 0;
            for (int j = 0; j <= J; ++j) sum += psi_j_radial(j, r);
            CHECK(sum == doctest::Approx(psi0_radial(std::ldexp(r, -J))).epsilon(1e-14));
            if (r <= std::ldexp(1.0, J - 1)) worst = std::max(worst, std::abs(sum - 1));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("spatial window telescoping") {
    for (double nu : {0.0, 0.45, 0.95}) {
        for (int j : {0, 3, 7}) {
            for (int L : {0, 2, 5}) {
                double worst = 0;
                for (double r = 0; r < 200; r += 0.0137) {
                    double sum = 0;
                    for (int l = 0; l <= L; ++l) sum += piece_window({j, l, nu}, r);
                    worst = std::max(worst, std::abs(sum - telescoped_window({j, 0, nu}, L).fn(r)));
                }
                CHECK(worst < 1e-12);
            }
        }
    }
    const PieceIndex idx{4, 2, 0.5};
    const auto [lo, hi] = piece_window_support(idx);
    CHECK(piece_window(idx, lo * 0.999) == 0);
    CHECK(piece_window(idx, hi * 1.001) == 0);
    CHECK(piece_window(idx, 0) == 0);
}

TEST_CASE("apply oracles") {
    const GridSpec s{1, 2, 5};
    const GridFunction f = gaussian(s, 0.4, 1.5);
    CHECK(max_abs_diff(apply(bessel(0), f), f) < 1e-12);
    const auto phi = [](std::span<const double> x) { return cplx(std::cos(3 * x[0]), 0.5 * x[0]); };
    const GridFunction mf = apply(multiplication(phi), f);
    GridFunction expect(s);
    for (std::size_t i = 0; i < f.size(); ++i) expect[i] = phi(f.point(i)) * f[i];
    CHECK(max_abs_diff(mf, expect) < 1e-12);
    CHECK(max_abs_diff(apply(multiplication(phi), f, {true, true}), expect) < 1e-12);

    const GridFunction fast = apply(bessel(-2), f);
    const GridFunction direct = apply(bessel(-2), f, {true, true});
    CHECK(max_abs_diff(fast, direct) < 1e-10);
    CHECK(max_abs_diff(fast, naive_apply(bessel(-2), f)) < 1e-10);
    const auto rb = rough_bump(-1, 1);
    CHECK(max_abs_diff(apply(rb, f), apply(rb, f, {true, true})) < 1e-10);
    CHECK(max_abs_diff(apply(rb, f), naive_apply(rb, f)) < 1e-10);

    GridFunction wide(s);
    wide[0] = 1;
    CHECK_THROWS_WITH(apply(bessel(-1), wide), "wraparound risk");
}

TEST_CASE("apply in 2D") {
    const GridSpec s{2, 2, 3};
    const GridFunction f = gaussian(s, 0.5, 1.5);
    CHECK(max_abs_diff(apply(bessel(0), f), f) < 1e-12);
    CHECK(max_abs_diff(apply(bessel(-2), f), apply(bessel(-2), f, {true, true})) < 1e-10);
}

TEST_CASE("linearity and translation covariance") {
    const GridSpec s{1, 2, 5};
    const auto corpus = make_corpus(s, 3, 4);
    const auto a = bessel(-1);
    const GridFunction lhs = apply(a, cplx(2, 1) * corpus[0] + corpus[1]);
    const GridFunction rhs = cplx(2, 1) * apply(a, corpus[0]) + apply(a, corpus[1]);
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
    GridFunction shifted(s);
    for (std::size_t i = 1; i < s.size(); ++i) shifted[i] = corpus[0][i - 1];
    const GridFunction t0 = apply(a, corpus[0]), t1 = apply(a, shifted);
    double worst = 0;
    for (std::size_t i = 1; i < s.size(); ++i) worst = std::max(worst, std::abs(t1[i] - t0[i - 1]));
    CHECK(worst < 1e-12);
}

TEST_CASE("frequency localization of bands") {
    const GridSpec s{1, 2, 5};
    const ApplyOptions loose{false, false};
    const int J = default_J(s);
    for (std::int64_t k : {1, 3, 7, 20, 45, 100}) {
        const GridFunction f = plane_wave(s, k);
        const double xi = 2 * kPi * static_cast<double>(k) / s.L();
        for (int j = 0; j <= J; ++j) {
            const GridFunction t = lp_piece_apply(bessel(0), j, f, loose);
            const double w = psi_j_radial(j, xi);
            CHECK(max_abs_diff(t, w * f) < 1e-12);
            if (w == 1) CHECK(max_abs_diff(t, f) < 1e-12);
            if (w == 0) CHECK(t.max_abs() < 1e-12);
        }
    }
}

TEST_CASE("band and spatial sums") {
    const GridSpec s{1, 2, 5};
    const auto corpus = make_corpus(s, 2, 4);
    const int J = default_J(s);
    for (const auto& a : {bessel(-1), rough_bump(-0.5, 1), oscillatory_ct(0.5, -0.25)}) {
        for (const auto& f : corpus) {
            GridFunction sum(s);
            for (int j = 0; j <= J; ++j) sum += lp_piece_apply(a, j, f);
            CHECK(max_abs_diff(sum, apply_cut(a, truncation_cut(J), f)) < 1e-10);
            CHECK(max_abs_diff(sum, apply(a, f)) < 1e-10);
            for (int j : {0, 3, 6}) {
                const PieceIndex base{j, 0, 0.5};
                // window ψ0(2^{jν-L-1}|z|) is 1 on |z| ≤ 2^{L-jν} ≥ 2^K
                const int L = s.K + static_cast<int>(std::ceil(j * base.nu)) + 1;
                GridFunction ls(s);
                for (int l = 0; l <= L; ++l) ls += spatial_piece_apply(a, {j, l, base.nu}, f);
                CHECK(max_abs_diff(ls, lp_piece_apply(a, j, f)) < 1e-10);
            }
        }
    }
}

TEST_CASE("windowed contraction against a naive kernel") {
    const GridSpec s{1, 1, 4};
    const GridFunction f = gaussian(s, 0.3, 0.6);
    const PieceIndex idx{3, 1, 0.5};
    const auto a = bessel(-1);
    const GridFunction fast = spatial_piece_apply(a, idx, f);
    const GridFunction slow = spatial_piece_apply(a, idx, f, {true, true});
    const auto N = s.N();
    GridFunction naive(s);
    for (std::int64_t i = 0; i < N; ++i) {
        cplx acc(0);
        for (std::int64_t ip = 0; ip < N; ++ip) {
            std::int64_t d = i - ip;
            if (d >= N / 2) d -= N;
            if (d < -N / 2) d += N;
            const double z = static_cast<double>(d) * s.h();
            cplx K(0);
            for (std::int64_t k = -N / 2; k < N / 2; ++k) {
                const double xi = 2 * kPi * static_cast<double>(k) / s.L();
                K += std::pow(1 + xi * xi, -0.5) * psi_j_radial(idx.j, std::abs(xi)) * std::polar(1.0, xi * z);
            }
            K /= s.L();
            acc += K * piece_window(idx, std::abs(z)) * f[static_cast<std::size_t>(ip)];
        }
        naive[static_cast<std::size_t>(i)] = acc * s.h();
    }
    CHECK(max_abs_diff(fast, naive) < 1e-12);
    CHECK(max_abs_diff(slow, naive) < 1e-12);
}

TEST_CASE("spatial support of pieces") {
    const GridSpec s{1, 3, 5};
    const auto a = bessel(-1);
    for (const PieceIndex idx : {PieceIndex{2, 1, 0.5}, PieceIndex{4, 2, 0.5}, PieceIndex{5, 0, 0.95}}) {
        const double t = idx.l - idx.j * idx.nu;
        const double R = std::exp2(t + 1);  // outer window radius
        // Q centred at 0; f supported in (1/3)Q; side chosen so that R ≤ side/3
        const Rational side = Rational::pow2(static_cast<int>(std::floor(t)) + 4);
        const Box q{{-side * Rational(1, 2)}, {side * Rational(1, 2)}};
        if (!s.central_half().contains(q)) continue;
        REQUIRE(R <= side.to_double() / 3);
        GridFunction f = make_corpus(s, 5, 1)[0];
        f = GridFunction(s);
        const Box third = third_dilate(q);
        const auto r = cell_range(s, third);
        for (auto i = r[0].first; i < r[0].second; ++i) f[static_cast<std::size_t>(i)] = std::cos(0.7 * static_cast<double>(i));
        const GridFunction out = spatial_piece_apply(a, idx, f);
        const double mx = out.max_abs();
        REQUIRE(mx > 0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = out.point(i)[0];
            const double dist = std::max({0.0, third.lower[0].to_double() - x, x - third.upper[0].to_double()});
            if (dist > R + s.h()) CHECK(std::abs(out[i]) < 1e-12 * mx);
            if (!q.contains_point({Rational(static_cast<std::int64_t>(2 * i + 1), 2) * s.spacing() + s.origin()})) {
                CHECK(std::abs(out[i]) < 1e-12 * mx);
            }
        }
    }
}

TEST_CASE("kernel slices") {
    const GridSpec s{1, 2, 5};
    const std::size_t x = s.size() / 2 + 3;
    // ℓ ≥ 1 kills the diagonal
    const auto ks = kernel_slice(bessel(-1), PieceIndex{3, 2, 0.5}, x, s);
    CHECK(ks.at_offset({0}) == cplx(0));
    // vanishes outside the window
    const auto [lo, hi] = piece_window_support({3, 2, 0.5});
    for (std::size_t y = 0; y < s.size(); ++y) {
        const double z = std::abs(s.coord(static_cast<std::int64_t>(x)) - s.coord(static_cast<std::int64_t>(y)));
        if (z < lo || z > hi) CHECK(ks.values[y] == cplx(0));
    }
    // radial: K(x, z) = K(x, -z) for radial symbols
    const auto k0 = kernel_slice(bessel(-1), PieceIndex{2, 0, 0.5}, x, s);
    for (std::int64_t d = 1; d < 20; ++d) CHECK(std::abs(k0.at_offset({d}) - k0.at_offset({-d})) < 1e-14);

    // j = 0 masses: the ℓ-slices telescope to a saturated window whose mass is ψ0(0) = 1
    cplx total(0);
    for (int l = 0; l <= s.K + 1; ++l) total += kernel_slice(bessel(0), PieceIndex{0, l, 0}, x, s).mass();
    CHECK(std::abs(total - cplx(1)) < 1e-12);

    // ℓ = 0 slice against a direct quadrature of (1/2π)∫ψ0(ξ)e^{iξz}dξ,
    // periodized over the box (Poisson summation)
    const GridSpec big{1, 4, 3};
    const std::size_t xb = big.size() / 2;
    const auto s0 = kernel_slice(bessel(0), PieceIndex{0, 0, 0}, xb, big);
    auto K = [](double z) {
        const int M = 4000;
        double acc = 0;
        for (int q = 1; q < M; ++q) {
            const double xi = -1 + 2.0 * q / M;
            acc += psi0_radial(std::abs(xi)) * std::cos(xi * z);
        }
        return acc * (2.0 / M) / (2 * kPi);
    };
    cplx mass(0);
    for (std::int64_t d = -16; d <= 16; ++d) {
        const double z = static_cast<double>(d) * big.h();
        double Kp = 0;
        for (int m = -40; m <= 40; ++m) Kp += K(z + m * big.L());
        const double w = piece_window({0, 0, 0}, std::abs(z));
        CHECK(std::abs(s0.at_offset({d}) - Kp * w) < 1e-10);
        mass += Kp * w * big.h();
    }
    CHECK(std::abs(s0.mass() - mass) < 1e-10);
    CHECK(kernel_cache_size() > 0);
}

TEST_CASE("localized application") {
    const GridSpec s{1, 2, 5};
    const auto corpus = make_corpus(s, 8, 4);
    const auto a = bessel(-0.5);
    for (const auto& f : corpus) {
        // window ψ0(2^{-ℓ1}|z|) ≡ 1 once 2^{ℓ1-1} ≥ max |z| = 2^K
        CHECK(max_abs_diff(apply_localized({a, s.K + 1}, f), apply(a, f)) < 1e-10);
        const auto phi = [](std::span<const double> x) { return cplx(1 + x[0] * x[0]); };
        GridFunction expect(s);
        for (std::size_t i = 0; i < f.size(); ++i) expect[i] = phi(f.point(i)) * f[i];
        for (int l1 : {1, 2}) CHECK(max_abs_diff(apply_localized({multiplication(phi), l1}, f), expect) < 1e-12);
    }
    // point mass gives the windowed kernel column
    GridFunction delta(s);
    const std::size_t y0 = s.size() / 2;
    delta[y0] = 1 / s.h();
    const GridFunction col = apply_localized({a, 1}, delta);
    for (std::size_t xi = 0; xi < s.size(); xi += 7) {
        const auto ks = kernel_slice(a, truncation_cut(default_J(s)), localization_window(1), xi, s);
        CHECK(std::abs(col[xi] - ks.values[y0]) < 1e-12);
    }
}
