#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparselab/dyadic.hpp"
#include "sparselab/report.hpp"
#include "sparselab/sample.hpp"

namespace sparselab {

enum class Flavor { stopping_time, whitney };
std::string to_string(Flavor f);

struct SparseEntry {
    /// Stopping time: the cube Q itself. Whitney: the inner cube Q of the entry 3Q.
    DyadicCube cube;
    /// Region the form averages over: Q, or the concentric triple 3Q.
    Box box;
    int rank = 0;
    /// E: cells of `cube` minus the cells of the children's cubes (sorted flat frame indices).
    std::vector<std::size_t> survivor;
    std::vector<std::size_t> children;
    std::optional<std::size_t> parent;
    /// Whitney only: |F1 ∪ F2| / |Q| measured on the window 3Q.
    double level_fraction = 0;
};

struct SparseCollection {
    Flavor flavor = Flavor::stopping_time;
    std::size_t n = 1;
    double eta = 0.5;
    /// Cell lattice (grid spacing, aligned with the grid) holding every entry box.
    CellLattice frame;
    std::vector<SparseEntry> entries;
    /// Recorded choices and counters: root/rank-0 scale, finest scale, truncations.
    std::map<std::string, double> info;

    std::size_t box_cells(std::size_t i) const;
    std::size_t cube_cells(std::size_t i) const;
    std::vector<Box> boxes() const;
    std::vector<int> ranks() const;
};

struct StoppingConfig {
    double r = 1;
    double s_prime = 1;
    /// Threshold factors; default 4^{1/r} and 4^{1/s'}.
    std::optional<double> f_factor;
    std::optional<double> g_factor;
    /// Root scale; default is the finest scale whose 2^n roots hold both supports.
    std::optional<int> k0;
    /// Extend the negative-rank parent chain up to this scale (off when unset).
    std::optional<int> coarsest;
};

/// Recomputes the frame and survivor sets of a hand-built collection from
/// its entries' cubes, boxes and children.
void finalize_collection(SparseCollection& S, const GridSpec& spec);

/// Stopping-time families over every ω ∈ {0,1,2}^n, merged into one collection.
SparseCollection build_stopping_time(const GridFunction& f, const GridFunction& g, const StoppingConfig& cfg);

/// Root cubes (m_i ∈ {0,-1}) of one ω at scale k.
std::vector<DyadicCube> root_cubes(std::size_t n, int k, const std::vector<int>& omega);
/// Finest k whose roots hold the supports for every ω.
int default_root_scale(const GridFunction& f, const GridFunction& g);

/// Scale-k subcubes of entry i not contained in one of its selected children.
std::vector<DyadicCube> survivor_cubes(const SparseCollection& S, std::size_t entry, int k);

struct WhitneyConfig {
    double eta = 0.5;
    double r = 2;
    double s_prime = 1;
    /// Weak-type surrogates for M^c_r and M^c_{s'}; default 3^{n/p}.
    std::optional<double> weak_r;
    std::optional<double> weak_s;
    /// Rank-0 cubes need side ≥ 2^{l1} + 2·l2 so the operator stays inside 3Q.
    int l1 = 1;
    double l2 = 1;
    std::optional<int> rank0_scale;
    int max_rank = 64;
};

SparseCollection build_whitney_sparse(const GridFunction& f, const GridFunction& g, const WhitneyConfig& cfg);
/// Finest k with 2^{-k} ≥ 2^{l1} + 2·l2.
int whitney_rank0_scale(int l1, double l2);

/// Disjointness, |E| ≥ η|box|, and for Whitney collections the poset axioms,
/// rank-zero comparability and support cover. `support` is checked against
/// the union of rank-zero inner cubes when given.
ProbeReport verify_sparsity(const SparseCollection& S, double eta, const GridFunction* f = nullptr,
                            const GridFunction* g = nullptr);

/// max |f - Σ_ω Σ_Q Σ_{Q'∈𝓔(Q), scale k} f χ_{(1/3)Q'}| over grid cells.
double decomposition_residual(const SparseCollection& S, const GridFunction& f, int k);

/// Worst ⟨f⟩_{r,Q'}/⟨f⟩_{r,Q} and ⟨g⟩_{s',Q'}/⟨g⟩_{s',Q} over every entry and
/// every survivor cube between the entry scale and the finest scale.
struct SurvivorBound {
    double f_ratio = 0;
    double g_ratio = 0;
    std::size_t cubes = 0;
};
SurvivorBound survivor_average_bound(const SparseCollection& S, const GridFunction& f, const GridFunction& g,
                                     double r, double s_prime);

/// Λ = Σ |box|⟨f⟩_{r,box}⟨g⟩_{s',box} (physical measure).
double sparse_form(const SparseCollection& S, const GridFunction& f, const GridFunction& g, double r, double s_prime);

void write_text(std::ostream& os, const SparseCollection& S);
SparseCollection read_text(std::istream& is);

}  // namespace sparselab
