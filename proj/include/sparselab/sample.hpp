#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sparselab/dyadic.hpp"

namespace sparselab {

using cplx = std::complex<double>;

/// Uniform grid on [-2^K, 2^K)^n with spacing 2^{-kappa}; cell i along an axis
/// is [-2^K + i h, -2^K + (i+1) h) and is sampled at its midpoint.
struct GridSpec {
    int n = 1;
    int K = 2;
    int kappa = 6;

    std::int64_t N() const { return std::int64_t{1} << (K + kappa + 1); }
    std::size_t size() const;
    double h() const;
    /// Side of the periodic box, 2^{K+1}.
    double L() const;
    double half() const;  // 2^K
    double coord(std::int64_t i) const { return -half() + (static_cast<double>(i) + 0.5) * h(); }
    Rational spacing() const { return Rational::pow2(-kappa); }
    Rational origin() const { return -Rational::pow2(K); }
    CellLattice lattice() const;
    Box domain() const;
    /// Central half [-2^{K-1}, 2^{K-1})^n.
    Box central_half() const;

    void validate() const;
    bool operator==(const GridSpec&) const = default;
};

/// Index range per axis, half-open, possibly extending past the grid.
using CellRange = std::vector<std::pair<std::int64_t, std::int64_t>>;

/// Complex samples on a GridSpec, row-major with axis 0 slowest.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridSpec spec);
    GridFunction(GridSpec spec, std::vector<cplx> samples);

    const GridSpec& spec() const { return spec_; }
    std::size_t size() const { return samples_.size(); }
    const std::vector<cplx>& samples() const { return samples_; }
    std::vector<cplx>& samples() { return samples_; }
    cplx operator[](std::size_t i) const { return samples_[i]; }
    cplx& operator[](std::size_t i) { return samples_[i]; }

    std::size_t flat(const std::vector<std::int64_t>& idx) const;
    std::vector<std::int64_t> index(std::size_t flat) const;
    /// Midpoint coordinates of a flat cell.
    std::vector<double> point(std::size_t flat) const;

    bool finite() const;
    bool is_zero() const;
    double max_abs() const;
    /// Bounding index range of nonzero cells; nullopt for the zero function.
    std::optional<CellRange> support_cells() const;
    /// Smallest grid-aligned box containing the nonzero cells.
    std::optional<Box> support_box() const;

    GridFunction abs() const;
    GridFunction restricted(const Box& b) const;  // f·χ_b by cell midpoints
    GridFunction& operator+=(const GridFunction& o);
    GridFunction& operator-=(const GridFunction& o);
    GridFunction& operator*=(cplx c);
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(cplx c, GridFunction a) { return a *= c; }

private:
    GridSpec spec_;
    std::vector<cplx> samples_;
};

/// Discrete pairing Σ f·conj(g)·h^n.
cplx inner(const GridFunction& f, const GridFunction& g);
/// (Σ |f|^p h^n)^{1/p}; p = inf gives the max.
double lp_norm(const GridFunction& f, double p);
double max_abs_diff(const GridFunction& a, const GridFunction& b);

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponents 1 ≤ r ≤ s ≤ ∞ with s' = s/(s-1) and Schur p from 1/s + 1 = 1/p + 1/r.
struct ExponentPair {
    double r = 2;
    double s = 2;

    double s_prime() const;
    double r_prime() const;
    double schur_p() const;
    void validate() const;
};

double conjugate(double p);

/// Cells of the grid (extended by zero outside) whose midpoints lie in b.
CellRange cell_range(const GridSpec& spec, const Box& b);

/// ⟨f⟩_{p,Q}: p-mean of |f| over the cells with midpoint in Q.
double average_p(const GridFunction& f, const Box& q, double p);

/// Prefix-sum tables of |f|^p for repeated averages at one exponent (n ≤ 2).
/// The p-th power carries an absolute error relative to the global p-sum;
/// ranges without a nonzero cell return exactly 0.
class AverageTable {
public:
    AverageTable(const GridFunction& f, double p);
    double average(const Box& q) const;
    double average(const CellRange& r) const;
    double exponent() const { return p_; }

private:
    long double sum(const CellRange& clipped, const std::vector<long double>& t) const;
    const GridFunction* f_;
    double p_;
    std::int64_t N_;
    std::vector<long double> s_;   // (N+1)^n prefix sums of |f|^p
    std::vector<long double> nz_;  // prefix counts of nonzero cells
};

std::vector<GridFunction> make_corpus(const GridSpec& spec, std::uint64_t seed, int count);
/// Type label of corpus item i: bump, indicator, comb, noise.
std::string corpus_kind(int i);

void write_binary(std::ostream& os, const GridFunction& f);
GridFunction read_binary(std::istream& is);
void write_binary(const std::string& path, const GridFunction& f);
GridFunction read_binary(const std::string& path);

}  // namespace sparselab
