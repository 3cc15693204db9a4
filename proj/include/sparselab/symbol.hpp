#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sparselab {

using cplx = std::complex<double>;

enum class SymbolKind { smooth, rough_symbol, localized_amplitude };
enum class SymbolFamily { bessel, oscillatory_ct, rough_bump, multiplication, custom };

std::string to_string(SymbolKind k);
std::string to_string(SymbolFamily f);

using SymbolFn = std::function<cplx(std::span<const double> x, std::span<const double> xi)>;
using XFactor = std::function<cplx(std::span<const double> x)>;
using XiFactor = std::function<cplx(std::span<const double> xi)>;

/// a(x, ξ) with declared order m and (ρ, δ). When the symbol factors as
/// b(x)·c(ξ) both factors are set and operators may use an FFT path.
class SymbolClass {
public:
    SymbolClass(SymbolFamily family, SymbolKind kind, double m, double rho, double delta, SymbolFn eval);

    SymbolFamily family() const { return family_; }
    SymbolKind kind() const { return kind_; }
    double m() const { return m_; }
    double rho() const { return rho_; }
    double delta() const { return delta_; }
    /// Unique per constructed symbol, shared by copies; used as a cache key.
    std::uint64_t id() const { return id_; }

    cplx operator()(std::span<const double> x, std::span<const double> xi) const { return eval_(x, xi); }

    bool separable() const { return static_cast<bool>(xi_factor_); }
    bool x_independent() const { return separable() && !x_factor_; }
    /// b(x); 1 when x-independent.
    cplx x_factor(std::span<const double> x) const { return x_factor_ ? x_factor_(x) : cplx(1); }
    cplx xi_factor(std::span<const double> xi) const { return xi_factor_(xi); }
    SymbolClass& set_factors(XFactor b, XiFactor c);

    /// Recorded family parameters (for reports).
    std::map<std::string, double> params;

private:
    SymbolFamily family_;
    SymbolKind kind_;
    double m_, rho_, delta_;
    SymbolFn eval_;
    XFactor x_factor_;
    XiFactor xi_factor_;
    std::uint64_t id_;
};

/// (1+|ξ|²)^{m/2}; declared S^m_{1,0} unless a class (ρ, δ) is given.
SymbolClass bessel(double m);
SymbolClass bessel(double m, double rho, double delta);
/// e^{i|ξ|^{1-ρ}}(1+|ξ|²)^{m0/2}, declared S^{m0}_{ρ,0}.
SymbolClass oscillatory_ct(double rho, double m0);
/// sign(sin(32π x_1))·(1+|ξ|²)^{m/2}, declared L^∞S^m_ρ.
SymbolClass rough_bump(double m, double rho);
/// φ(x).
SymbolClass multiplication(XFactor phi);
SymbolClass custom(SymbolFn eval, double m, double rho, double delta, SymbolKind kind = SymbolKind::smooth);

/// a·ψ0(2^{-J}ξ) as a new symbol.
SymbolClass frequency_truncated(const SymbolClass& a, int J);

/// Separable amplitude a(x,ξ)·ψ0(2^{-ℓ1}(x-y)).
struct LocalizedAmplitude {
    SymbolClass base;
    int l1 = 1;
    cplx operator()(std::span<const double> x, std::span<const double> y, std::span<const double> xi) const;
};

struct ProbeWeight {
    double m, rho, delta;
};

/// max over the grids of |∂_ξ^α ∂_x^β a|·(1+|ξ|)^{-m+ρ|α|-δ|β|} by central
/// finite differences; weight defaults to the declared class.
double seminorm_probe(const SymbolClass& a, const std::vector<int>& alpha, const std::vector<int>& beta,
                      const std::vector<std::vector<double>>& xi_grid, const std::vector<std::vector<double>>& x_grid,
                      std::optional<ProbeWeight> weight = std::nullopt);

}  // namespace sparselab
