#pragma once

#include <cmath>
#include <span>

namespace sparselab {

/// Smooth step: 0 for t ≤ 0, 1 for t ≥ 1, θ(1/2) = 1/2.
inline double smooth_step(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

/// ψ0 as a function of |ξ|: 1 on [0,1/2], 0 on [1,∞).
inline double psi0_radial(double r) { return smooth_step(2.0 * (1.0 - r)); }

/// ψ(ξ) = ψ0(ξ/2) - ψ0(ξ), supported in 1/2 ≤ |ξ| ≤ 2.
inline double psi_radial(double r) { return psi0_radial(0.5 * r) - psi0_radial(r); }

/// ψ_j: ψ0 for j = 0, ψ(2^{1-j}·) for j ≥ 1.
inline double psi_j_radial(int j, double r) { return j == 0 ? psi0_radial(r) : psi_radial(std::ldexp(r, 1 - j)); }

inline double norm2(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Radial cutoffs evaluated on vectors.
struct CutoffFamily {
    double psi0(std::span<const double> xi) const { return psi0_radial(norm2(xi)); }
    double psi(std::span<const double> xi) const { return psi_radial(norm2(xi)); }
    double eval(int j, std::span<const double> xi) const { return psi_j_radial(j, norm2(xi)); }
};

}  // namespace sparselab
