#include "sparselab/symbol.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

#include "sparselab/cutoff.hpp"
#include "sparselab/error.hpp"

namespace sparselab {

namespace {

std::atomic<std::uint64_t> next_id{1};

double sq_norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

double binomial(int n, int k) {
    double b = 1;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

}  // namespace

std::string to_string(SymbolKind k) {
    switch (k) {
        case SymbolKind::smooth: return "smooth";
        case SymbolKind::rough_symbol: return "rough_symbol";
        case SymbolKind::localized_amplitude: return "localized_amplitude";
    }
    return "?";
}

std::string to_string(SymbolFamily f) {
    switch (f) {
        case SymbolFamily::bessel: return "bessel";
        case SymbolFamily::oscillatory_ct: return "oscillatory_ct";
        case SymbolFamily::rough_bump: return "rough_bump";
        case SymbolFamily::multiplication: return "multiplication";
        case SymbolFamily::custom: return "custom";
    }
    return "?";
}

SymbolClass::SymbolClass(SymbolFamily family, SymbolKind kind, double m, double rho, double delta, SymbolFn eval)
    : family_(family), kind_(kind), m_(m), rho_(rho), delta_(delta), eval_(std::move(eval)), id_(next_id++) {
    if (rho < 0 || rho > 1 || delta < 0 || delta > 1) throw Error("symbol class parameters out of [0,1]");
}

SymbolClass& SymbolClass::set_factors(XFactor b, XiFactor c) {
    x_factor_ = std::move(b);
    xi_factor_ = std::move(c);
    return *this;
}

SymbolClass bessel(double m) { return bessel(m, 1, 0); }

SymbolClass bessel(double m, double rho, double delta) {
    auto c = [m](std::span<const double> xi) { return cplx(std::pow(1.0 + sq_norm(xi), 0.5 * m)); };
    SymbolClass a(SymbolFamily::bessel, SymbolKind::smooth, m, rho, delta,
                  [c](std::span<const double>, std::span<const double> xi) { return c(xi); });
    a.set_factors(nullptr, c);
    a.params = {{"m", m}, {"rho", rho}, {"delta", delta}};
    return a;
}

SymbolClass oscillatory_ct(double rho, double m0) {
    auto c = [rho, m0](std::span<const double> xi) {
        const double r2 = sq_norm(xi);
        const double phase = std::pow(std::sqrt(r2), 1.0 - rho);
        return std::polar(std::pow(1.0 + r2, 0.5 * m0), phase);
    };
    SymbolClass a(SymbolFamily::oscillatory_ct, SymbolKind::smooth, m0, rho, 0,
                  [c](std::span<const double>, std::span<const double> xi) { return c(xi); });
    a.set_factors(nullptr, c);
    a.params = {{"rho", rho}, {"m0", m0}};
    return a;
}

SymbolClass rough_bump(double m, double rho) {
    auto b = [](std::span<const double> x) {
        const double s = std::sin(32.0 * std::numbers::pi * x[0]);
        return cplx(s >= 0 ? 1.0 : -1.0);
    };
    auto c = [m](std::span<const double> xi) { return cplx(std::pow(1.0 + sq_norm(xi), 0.5 * m)); };
    SymbolClass a(SymbolFamily::rough_bump, SymbolKind::rough_symbol, m, rho, 0,
                  [b, c](std::span<const double> x, std::span<const double> xi) { return b(x) * c(xi); });
    a.set_factors(b, c);
    a.params = {{"m", m}, {"rho", rho}};
    return a;
}

SymbolClass multiplication(XFactor phi) {
    SymbolClass a(SymbolFamily::multiplication, SymbolKind::smooth, 0, 1, 0,
                  [phi](std::span<const double> x, std::span<const double>) { return phi(x); });
    a.set_factors(phi, [](std::span<const double>) { return cplx(1); });
    return a;
}

SymbolClass custom(SymbolFn eval, double m, double rho, double delta, SymbolKind kind) {
    return SymbolClass(SymbolFamily::custom, kind, m, rho, delta, std::move(eval));
}

SymbolClass frequency_truncated(const SymbolClass& a, int J) {
    auto cut = [J](std::span<const double> xi) { return psi0_radial(std::ldexp(std::sqrt(sq_norm(xi)), -J)); };
    SymbolClass t(a.family(), a.kind(), a.m(), a.rho(), a.delta(),
                  [a, cut](std::span<const double> x, std::span<const double> xi) { return a(x, xi) * cut(xi); });
    if (a.separable()) {
        XFactor b;
        if (!a.x_independent()) b = [a](std::span<const double> x) { return a.x_factor(x); };
        t.set_factors(b, [a, cut](std::span<const double> xi) { return a.xi_factor(xi) * cut(xi); });
    }
    t.params = a.params;
    t.params["J"] = J;
    return t;
}

cplx LocalizedAmplitude::operator()(std::span<const double> x, std::span<const double> y, std::span<const double> xi) const {
    double d2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    return base(x, xi) * psi0_radial(std::ldexp(std::sqrt(d2), -l1));
}

double seminorm_probe(const SymbolClass& a, const std::vector<int>& alpha, const std::vector<int>& beta,
                      const std::vector<std::vector<double>>& xi_grid, const std::vector<std::vector<double>>& x_grid,
                      std::optional<ProbeWeight> weight) {
    int na = 0, nb = 0;
    for (int v : alpha) {
        if (v < 0) throw Error("negative multi-index");
        na += v;
    }
    for (int v : beta) {
        if (v < 0) throw Error("negative multi-index");
        nb += v;
    }
    if (na + nb > 4) throw Error("derivative order above 4");
    if (nb > 0 && a.kind() == SymbolKind::rough_symbol) throw Error("no x-regularity declared");
    const ProbeWeight w = weight.value_or(ProbeWeight{a.m(), a.rho(), a.delta()});
    const double expo = -w.m + w.rho * na - w.delta * nb;

    double best = 0;
    for (const auto& xi0 : xi_grid) {
        const double r = std::sqrt(sq_norm(xi0));
        const double hxi = std::max(std::ldexp(1.0, -10), std::ldexp(1.0 + r, -10));
        const double hx = std::ldexp(1.0, -10);
        for (const auto& x0 : x_grid) {
            // tensor product of k-th central differences with half-step offsets
            const std::size_t nxi = xi0.size(), nx = x0.size();
            std::vector<int> orders;
            std::vector<double> steps;
            for (std::size_t i = 0; i < nxi; ++i) { orders.push_back(i < alpha.size() ? alpha[i] : 0); steps.push_back(hxi); }
            for (std::size_t i = 0; i < nx; ++i) { orders.push_back(i < beta.size() ? beta[i] : 0); steps.push_back(hx); }
            std::vector<int> jj(orders.size(), 0);
            cplx acc(0);
            std::vector<double> xi(xi0), x(x0);
            while (true) {
                double coef = 1;
                for (std::size_t d = 0; d < orders.size(); ++d) {
                    const double off = (0.5 * orders[d] - jj[d]) * steps[d];
                    if (d < nxi) xi[d] = xi0[d] + off;
                    else x[d - nxi] = x0[d - nxi] + off;
                    coef *= ((jj[d] % 2) ? -1.0 : 1.0) * binomial(orders[d], jj[d]) / std::pow(steps[d], orders[d]);
                }
                acc += coef * a(x, xi);
                std::size_t d = 0;
                for (; d < orders.size(); ++d) {
                    if (++jj[d] <= orders[d]) break;
                    jj[d] = 0;
                }
                if (d == orders.size()) break;
            }
            best = std::max(best, std::abs(acc) * std::pow(1.0 + r, expo));
        }
    }
    return best;
}

}  // namespace sparselab
