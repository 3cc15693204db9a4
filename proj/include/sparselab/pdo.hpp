#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sparselab/cutoff.hpp"
#include "sparselab/sample.hpp"
#include "sparselab/symbol.hpp"

namespace sparselab {

/// (j, ℓ, ν) of T^{j,ℓ}_{a,ν}.
struct PieceIndex {
    int j = 0;
    int l = 0;
    double nu = 0;
};

/// Smallest J with 2^{J-1} ≥ max discrete |ξ|, so ψ0(2^{-J}ξ) = 1 on the grid.
int default_J(const GridSpec& spec);
/// ρ - 0.05 clamped to [0, 1).
double default_nu(double rho);

/// Signed angular frequency of DFT index k along one axis: 2π k_s / L.
double frequency(const GridSpec& spec, std::int64_t k);
/// Frequency vector of a flat DFT index.
std::vector<double> frequency_vector(const GridSpec& spec, std::size_t flat);

/// Spatial window of a piece as a function of |z|: ψ0(2^{jν-1}|z|) for ℓ = 0,
/// ψ(2^{jν-ℓ}|z|) for ℓ ≥ 1.
double piece_window(const PieceIndex& idx, double r);
/// Radial support [inner, outer] of the piece window.
std::pair<double, double> piece_window_support(const PieceIndex& idx);

/// Radial weights applied to the ξ or z variables of a kernel. Empty means ≡ 1.
struct Radial {
    std::function<double(double)> fn;
    /// Identifies the weight in cache keys; must change whenever fn does.
    std::string key;
    explicit operator bool() const { return static_cast<bool>(fn); }
};

Radial band_cut(int j);               // ψ_j(|ξ|)
Radial truncation_cut(int J);         // ψ0(2^{-J}|ξ|)
Radial piece_window_radial(const PieceIndex& idx);
Radial localization_window(int l1);   // ψ0(2^{-ℓ1}|z|)
Radial telescoped_window(const PieceIndex& idx, int L);  // ψ0(2^{jν-L-1}|z|)

struct ApplyOptions {
    /// Use direct summation even when the symbol factors.
    bool force_direct = false;
    /// Raise "wraparound risk" when supp f leaves the central half.
    bool check_support = true;
};

/// Kohn–Nirenberg quadrature (1/N^n) Σ_k a(x, ξ_k)·cut(ξ_k) F_k e^{2πi k·i/N}.
GridFunction apply(const SymbolClass& a, const GridFunction& f, const ApplyOptions& opt = {});
GridFunction apply_cut(const SymbolClass& a, const Radial& cut, const GridFunction& f, const ApplyOptions& opt = {});
/// T^j: symbol times ψ_j.
GridFunction lp_piece_apply(const SymbolClass& a, int j, const GridFunction& f, const ApplyOptions& opt = {});

/// Kernel contraction Σ_y K(x, x-y) W(|x-y|) f(y) h^n where K is the kernel of
/// a·cut and the offsets x-y are minimal periodic images.
GridFunction apply_windowed(const SymbolClass& a, const Radial& cut, const Radial& window, const GridFunction& f,
                            const ApplyOptions& opt = {});
/// T^{j,ℓ}_{a,ν}.
GridFunction spatial_piece_apply(const SymbolClass& a, const PieceIndex& idx, const GridFunction& f,
                                 const ApplyOptions& opt = {});
/// T_{ã_{ℓ1}} with the full (J-truncated) kernel and window ψ0(2^{-ℓ1} z).
GridFunction apply_localized(const LocalizedAmplitude& a, const GridFunction& f, const ApplyOptions& opt = {});

/// Row K(x, x - y_i) over every grid cell y_i.
struct KernelSlice {
    GridSpec spec;
    std::size_t x = 0;
    std::vector<cplx> values;

    /// Value at the minimal-image offset z = x - y with integer cell offset d.
    cplx at_offset(const std::vector<std::int64_t>& d) const;
    /// Σ_y K·h^n.
    cplx mass() const;
    double sup() const;
};

KernelSlice kernel_slice(const SymbolClass& a, const PieceIndex& idx, std::size_t x, const GridSpec& spec);
/// General slice with explicit frequency cut and spatial window (either may be empty).
KernelSlice kernel_slice(const SymbolClass& a, const Radial& cut, const Radial& window, std::size_t x,
                         const GridSpec& spec);

/// Minimal-image cell offset of d in [0, N) per axis, in [-N/2, N/2).
std::vector<std::int64_t> min_image(const GridSpec& spec, std::size_t flat_offset);
/// |z| of the minimal-image offset between cells.
double offset_norm(const GridSpec& spec, const std::vector<std::int64_t>& d);

void clear_kernel_cache();
std::size_t kernel_cache_size();

}  // namespace sparselab
