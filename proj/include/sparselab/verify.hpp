#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparselab/maximal.hpp"
#include "sparselab/pdo.hpp"
#include "sparselab/report.hpp"
#include "sparselab/sample.hpp"
#include "sparselab/sparse.hpp"
#include "sparselab/symbol.hpp"

namespace sparselab {

/// Operator handle. Matrix rows follow (Tf)(x) = Σ_y A[x,y] f(y), so a kernel
/// operator has A[x,y] = K(x, x-y)·h^n.
struct Operator {
    std::string name;
    std::function<GridFunction(const GridFunction&)> apply;
    /// Grid adjoint of a linear operator; empty when unknown.
    std::function<GridFunction(const GridFunction&)> adjoint;
    std::function<std::vector<cplx>(const GridSpec&, std::size_t x)> row;
    /// Rows are cyclic shifts of one another (x-independent kernels).
    bool shift_invariant = false;
    /// Nonnegative sublinear output such as M^♯∘T; pairings then use |g|.
    bool sublinear = false;

    GridFunction operator()(const GridFunction& f) const { return apply(f); }
    bool linear() const { return !sublinear; }
};

Operator identity_operator();
Operator multiplication_operator(XFactor phi);
/// T_a with optional frequency cut and spatial window.
Operator symbol_operator(const SymbolClass& a, const Radial& cut = {}, const Radial& window = {}, ApplyOptions opt = {});
Operator piece_operator(const SymbolClass& a, const PieceIndex& idx, ApplyOptions opt = {});
/// T_{ã_{ℓ1}}: the J-truncated kernel times ψ0(2^{-ℓ1} z).
Operator localized_operator(const LocalizedAmplitude& a, ApplyOptions opt = {});
/// M^♯_{ℓ2} ∘ inner on balls.
Operator sharp_operator(Operator inner, double l2);
Operator matrix_operator(Eigen::MatrixXcd A, std::string name = "matrix");
/// Columns T(e_y), so linear operators only.
Eigen::MatrixXcd dense_matrix(const Operator& T, const GridSpec& spec);

struct LineFit {
    double slope = 0;
    double intercept = 0;
    /// RMS deviation of the points from the line.
    double residual = 0;
    std::size_t points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// |⟨Tf,g⟩| / Σ_S |Q|⟨f⟩_{r,Q}⟨g⟩_{s',Q}.
ProbeReport sparse_form_ratio(const Operator& T, const GridFunction& f, const GridFunction& g, const SparseCollection& S,
                              const ExponentPair& exps);

/// max |Tf| / D with D = Σ_S ⟨f⟩_{r,Q} χ_Q.
ProbeReport pointwise_domination_check(const Operator& T, const GridFunction& f, const SparseCollection& S, double r);

/// max(sup_x ‖K(x,·)‖_p, sup_y ‖K(·,y)‖_p) with 1/s + 1 = 1/p + 1/r.
double schur_bound(const Operator& T, const GridSpec& spec, const ExponentPair& exps);
double schur_bound(const SymbolClass& a, const PieceIndex& idx, const GridSpec& spec, const ExponentPair& exps);

struct NormEstimate {
    double value = 0;
    /// "lanczos", "row_sup" (exact for s = ∞) or "lower_bound".
    std::string method;
    int iterations = 0;
};
/// Norm of T on the periodic grid. r = s = 2 uses Lanczos on T*T; s = ∞
/// with known rows is exact; otherwise the best of the corpus, extremal
/// candidates and a p-norm power iteration (a certified lower bound).
NormEstimate estimate_norm(const Operator& T, const GridSpec& spec, const ExponentPair& exps, int trials, std::uint64_t seed);
double empirical_norm(const Operator& T, const GridSpec& spec, const ExponentPair& exps, int trials, std::uint64_t seed);

/// m + nμ + n(1/r - 1/s) with μ = max{0, (δ-ρ)/s, (ν-ρ)/s}; at s = ∞ this is m + n/r.
double predicted_norm_exponent(const SymbolClass& a, int n, const ExponentPair& exps, double nu);

enum class ScalingAxis { j, l };

struct NormFit {
    ScalingAxis axis = ScalingAxis::j;
    std::vector<int> index;
    std::vector<double> norms;
    std::string method;
    double fitted = 0;
    double predicted = 0;
    double residual = 0;
    double tolerance = 0;
    /// Σ B over the range.
    double summability = 0;
    /// ℓ-axis: least-squares slope over the whole range (the gate uses the terminal window).
    double full_slope = 0;
    bool pass = true;

    ProbeReport report(const std::string& name) const;
};

struct ScalingConfig {
    ScalingAxis axis = ScalingAxis::j;
    std::vector<int> indices;
    /// ℓ for the j-axis, j for the ℓ-axis.
    int fixed = 0;
    double nu = 0;
    int trials = 6;
    std::uint64_t seed = 1;
    double tolerance = 0.3;
    /// Slope bound for the ℓ-axis.
    double l_slope = -5;
    /// ℓ-axis: points in the terminal window of the slope gate; 0 uses all.
    int tail = 3;
};

NormFit norm_scaling_fit(const SymbolClass& a, const GridSpec& spec, const ExponentPair& exps, const ScalingConfig& cfg);

/// log2 sup_z |K^{j,ℓ}(x,z)| against ℓ; passes when the slope over the last
/// `tail` points is at most -2·N_target.
ProbeReport kernel_decay_fit(const SymbolClass& a, const GridSpec& spec, int j, const std::vector<int>& ls, double nu,
                             double n_target, std::optional<std::size_t> x = std::nullopt, int tail = 3);

struct DecayProbeConfig {
    double tau = 0.125;
    double theta = 1;
    double p = 2;
    double h = 0;
    double c1 = 1;
    double c2 = 1;
    std::vector<int> js;
    /// Second radius for the τ-exponent; default τ/2.
    std::optional<double> tau2;
    double slope_tolerance = 0.5;

    void validate(const SymbolClass& a, int n) const;
};

/// Midpoint of the admissible interval m + n/p < hρ < m + n/p + 1.
double midpoint_h(const SymbolClass& a, int n, double p);

/// (∫_{A_j} |K(x,x-y) - K(x_B,x_B-y)|^{p'} dy)^{1/p'} against j, K the
/// J-truncated kernel, windowed by ψ0(2^{-ℓ1}z) when ℓ1 is given.
ProbeReport kernel_difference_probe(const SymbolClass& a, const GridSpec& spec, std::size_t x, std::size_t x_B,
                                    const DecayProbeConfig& cfg, std::optional<int> l1 = std::nullopt);

struct SharpRatioConfig {
    double p = 2;
    std::vector<int> l1s{1, 2, 3, 4, 5};
    std::vector<int> l2s{1, 2, 3, 4, 5};
    /// R must vary by less than this factor across (ℓ1, ℓ2).
    double max_variation = 2;
    /// Off for inputs that fill the periodic grid (constants).
    bool check_support = true;
};

/// max over corpus and grid of M^♯_{ℓ2}(T_{ã_{ℓ1}} f) / M_p f.
ProbeReport sharp_ratio_probe(const SymbolClass& a, const std::vector<GridFunction>& corpus, const SharpRatioConfig& cfg);

struct AuditReport {
    double A1 = 0, A2 = 0, A3 = 0, A4 = 0;
    /// A2·A3 + 3^{n(1/s'-1)}·A1·A4.
    double C0 = 0;
    double pairing = 0;
    double sparse_form = 0;
    double base_residual = 0;
    double locality_leak = 0;
    /// Per rank: Σ pairings L_p, Σ |Q|⟨f⟩⟨g⟩, and slack of L_p ≤ C0·Λ_p + L_{p+1}.
    std::vector<double> rank_pairing;
    std::vector<double> rank_form;
    std::vector<double> rank_slack;
    /// Σ |inner| per rank and the bound (1-η)^p·Σ_0 |inner|.
    std::vector<double> tail_volume;
    std::vector<double> tail_bound;
    ProbeReport report;
};

AuditReport endpoint_audit(const Operator& T, const GridFunction& f, const GridFunction& g, const SparseCollection& S,
                           const ExponentPair& exps);

}  // namespace sparselab
