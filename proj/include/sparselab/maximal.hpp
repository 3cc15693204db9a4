#pragma once

#include <optional>
#include <vector>

#include "sparselab/sample.hpp"

namespace sparselab {

enum class Shape { ball, cube };

/// Windows are unions of whole cells inside the grid: intervals in 1D,
/// axis-parallel squares (cube) or cell-centre discretized Euclidean balls
/// (ball) in 2D. A window of radius r has r = (cells across)·h/2 for
/// intervals and squares, and its Euclidean radius for balls.
struct MaximalConfig {
    Shape shape = Shape::ball;
    double p = 1;
    std::optional<double> radius_cap;
};

/// Uncentred sup over windows containing each cell of ⟨f⟩_{p,window}.
GridFunction maximal_p(const GridFunction& f, const MaximalConfig& cfg);

/// Uncentred sup of the mean oscillation (1/|B|)Σ_B |f - f_B|.
GridFunction sharp_maximal(const GridFunction& f, std::optional<double> radius_cap = std::nullopt,
                           Shape shape = Shape::ball);
/// One sweep for several caps (kInf allowed); result i matches caps[i].
std::vector<GridFunction> sharp_maximal_caps(const GridFunction& f, const std::vector<double>& caps,
                                             Shape shape = Shape::ball);

/// Raw kernels on plain arrays; max_len bounds the window length in cells.
namespace raw {

/// 1D: M(i) = max over [i0,i1] ∋ i, i1-i0+1 ≤ max_len, of (mean |v|^p)^{1/p}.
std::vector<double> maximal_1d(const std::vector<double>& absval, double p, std::size_t max_len);
/// 1D sharp maximal of real data for several length caps.
std::vector<std::vector<double>> sharp_1d(const std::vector<double>& v, const std::vector<std::size_t>& max_lens);
/// 1D sharp maximal of complex data by direct summation.
std::vector<std::vector<double>> sharp_1d_complex(const std::vector<cplx>& v, const std::vector<std::size_t>& max_lens);
/// 2D squares on an n0 x n1 row-major array.
std::vector<double> maximal_squares(const std::vector<double>& absval, std::size_t n0, std::size_t n1, double p,
                                    std::size_t max_side);
std::vector<std::vector<double>> sharp_squares(const std::vector<cplx>& v, std::size_t n0, std::size_t n1,
                                               const std::vector<std::size_t>& max_sides);
/// 2D discrete balls: centres at cell midpoints, edge midpoints and corners;
/// a ball is every cell whose centre lies within some distance d of the
/// centre and its radius is d + 1/2 (in cells). Balls leaving the grid are
/// skipped, as are intervals and squares throughout.
std::vector<double> maximal_balls(const std::vector<double>& absval, std::size_t n0, std::size_t n1, double p,
                                  double max_radius_cells);
std::vector<std::vector<double>> sharp_balls(const std::vector<cplx>& v, std::size_t n0, std::size_t n1,
                                             const std::vector<double>& max_radius_cells);

}  // namespace raw

}  // namespace sparselab
