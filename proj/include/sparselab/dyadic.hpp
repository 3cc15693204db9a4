#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "sparselab/rational.hpp"

namespace sparselab {

/// Half-open product of intervals [lower_i, upper_i) with exact corners.
struct Box {
    std::vector<Rational> lower;
    std::vector<Rational> upper;

    std::size_t dim() const { return lower.size(); }
    Rational side(std::size_t axis) const { return upper[axis] - lower[axis]; }
    /// Side of the first axis; every box built from a cube is a cube.
    Rational side() const { return side(0); }
    Rational measure() const;
    Rational center(std::size_t axis) const { return (lower[axis] + upper[axis]) * Rational(1, 2); }

    bool contains(const Box& other) const;
    /// Positive-measure intersection.
    bool intersects(const Box& other) const;
    bool contains_point(const std::vector<Rational>& p) const;

    bool operator==(const Box&) const = default;
    std::string str() const;
};

/// Shifted dyadic cube: side 2^{-k}, integer position m, shift ω ∈ {0,1,2}^n.
///
/// Axis i covers [2^{-k}(m_i + σ_k ω_i/3), 2^{-k}(m_i + 1 + σ_k ω_i/3)) with
/// σ_k = (-1)^{k+1}. The alternating sign makes every ω-grid nested across
/// scales, so children/parents keep the same ω.
struct DyadicCube {
    int k = 0;
    std::vector<std::int64_t> m;
    std::vector<int> omega;

    std::size_t dim() const { return m.size(); }
    Rational side() const { return Rational::pow2(-k); }
    DyadicCube parent() const;

    auto operator<=>(const DyadicCube&) const = default;
    bool operator==(const DyadicCube&) const = default;
    std::string str() const;
};

Box cube_box(const DyadicCube& c);
/// Concentric box with one third of the side.
Box third_dilate(const Box& b);
Box third_dilate(const DyadicCube& c);
/// Concentric box scaled by `factor` (> 0).
Box concentric_dilate(const Box& b, const Rational& factor);
Box concentric_dilate(const DyadicCube& c, const Rational& factor);

std::vector<DyadicCube> children(const DyadicCube& c);

/// Cube of scale k and shift ω containing the point p.
DyadicCube cube_containing(const std::vector<Rational>& p, int k, const std::vector<int>& omega);

/// All scale-k, shift-ω cubes with positive-measure intersection with b.
std::vector<DyadicCube> cubes_meeting(const Box& b, int k, const std::vector<int>& omega);

/// True when the concentric dilate of `b` by sqrt(factor_sq) has a positive
/// measure intersection with `other` (used for the irrational 4√n dilate).
bool dilate_meets(const Box& b, const Rational& factor_sq, const Box& other);

/// Squared Euclidean distance between two closed boxes.
Rational box_distance_sq(const Box& a, const Box& b);

/// Uniform lattice of cells used to discretize open sets: cell i along each
/// axis is [origin + i·spacing, origin + (i+1)·spacing).
struct CellLattice {
    std::size_t n = 1;
    Rational origin;
    Rational spacing;
    std::int64_t cells_per_axis = 0;

    std::size_t total_cells() const;
    Box cell_box(const std::vector<std::int64_t>& idx) const;
    /// [lo, hi) index range per axis of the cells whose midpoint lies in b.
    std::vector<std::pair<std::int64_t, std::int64_t>> midpoint_range(const Box& b) const;
    std::vector<std::int64_t> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::vector<std::int64_t>& idx) const;
    Box domain() const;
};

/// Finite union of lattice cells; mask is row-major with axis 0 slowest.
struct CellSet {
    CellLattice lattice;
    std::vector<std::uint8_t> mask;

    bool empty() const;
    std::size_t count() const;
};

struct WhitneyOptions {
    /// Criterion ratio·side(Q') ≤ dist(Q', complement).
    Rational ratio = Rational(1, 4);
};

struct WhitneyCube {
    DyadicCube cube;
    /// Grid-scale cell kept to complete the cover although it fails the criterion.
    bool truncated = false;
};

/// Maximal dyadic cubes of the ω-grid inside `open` satisfying the Whitney
/// criterion, completed at grid scale. Cube membership uses cell midpoints;
/// distances are taken to the closed complement cells (cells outside the
/// lattice count as complement).
std::vector<WhitneyCube> whitney_decompose(const CellSet& open, const std::vector<int>& omega,
                                           const WhitneyOptions& opts = {});

/// Exact audit of a Whitney output: each open cell covered exactly once, no
/// complement cell covered, criterion on non-truncated cubes, and the
/// 4√n-dilate of every cube meeting the complement.
struct WhitneyAudit {
    bool cover_exact = true;
    bool disjoint = true;
    bool criterion = true;
    bool dilate_meets_complement = true;
    std::size_t violations = 0;
    bool ok() const { return cover_exact && disjoint && criterion && dilate_meets_complement; }
};
WhitneyAudit audit_whitney(const CellSet& open, const std::vector<WhitneyCube>& cubes,
                           const WhitneyOptions& opts = {});

/// Cubes ordered by inclusion of their central thirds, with a rank function
/// graded against the opposite order (rank 0 entries are the largest).
class CubePoset {
public:
    CubePoset(std::vector<Box> cubes, std::vector<int> ranks);

    std::size_t size() const { return cubes_.size(); }
    const Box& cube(std::size_t i) const { return cubes_[i]; }
    int rank(std::size_t i) const { return ranks_[i]; }

    /// Q_a ⪯ Q_b, i.e. (1/3)Q_a ⊆ (1/3)Q_b.
    bool precedes(std::size_t a, std::size_t b) const { return le_[a][b] != 0; }
    /// Q_a is covered by Q_b.
    bool covered_by(std::size_t a, std::size_t b) const { return cover_[a][b] != 0; }
    std::vector<std::size_t> covered(std::size_t b) const;

    struct Check {
        bool reflexive = true;
        bool antisymmetric = true;
        bool transitive = true;
        bool rank_compatible = true;
        bool rank_consistent = true;
        bool rank_nonnegative = true;
        bool comparable_to_rank_zero = true;
        bool ok() const {
            return reflexive && antisymmetric && transitive && rank_compatible && rank_consistent &&
                   rank_nonnegative && comparable_to_rank_zero;
        }
    };
    Check check() const;

private:
    std::vector<Box> cubes_;
    std::vector<Box> thirds_;
    std::vector<int> ranks_;
    std::vector<std::vector<std::uint8_t>> le_;
    std::vector<std::vector<std::uint8_t>> cover_;
};

}  // namespace sparselab
