#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "sparselab/error.hpp"
#include "sparselab/verify.hpp"

using namespace sparselab;

namespace {

GridFunction indicator(const GridSpec& spec, double a, double b, double height = 1) {
    GridFunction f(spec);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.point(i)[0];
        bool in = x >= a && x < b;
        if (spec.n == 2) in = in && f.point(i)[1] >= a && f.point(i)[1] < b;
        if (in) f[i] = height;
    }
    return f;
}

// One entry with no children, so E = Q.
SparseCollection single(const GridSpec& spec, const DyadicCube& c, Flavor flavor) {
    SparseCollection S;
    S.flavor = flavor;
    S.n = static_cast<std::size_t>(spec.n);
    SparseEntry e;
    e.cube = c;
    e.box = flavor == Flavor::whitney ? concentric_dilate(c, Rational(3)) : cube_box(c);
    S.entries.push_back(e);
    S.eta = flavor == Flavor::whitney ? std::pow(3.0, -spec.n) : 1;
    finalize_collection(S, spec);
    return S;
}

double top_singular_value(const Eigen::MatrixXcd& A) {
    return Eigen::BDCSVD<Eigen::MatrixXcd>(A).singularValues()(0);
}

std::size_t cell_at(const GridSpec& spec, double x) {
    return static_cast<std::size_t>(std::llround((x + spec.half()) / spec.h() - 0.5));
}

}  // namespace

TEST_CASE("verify: sparse form ratio of the identity on one cube is 1") {
    const GridSpec spec{1, 2, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {0}, {0}}, Flavor::stopping_time);
    const GridFunction f = indicator(spec, 0, 1);
    const ProbeReport rep = sparse_form_ratio(identity_operator(), f, f, S, {2, 2});
    CHECK(rep.pass);
    CHECK(rep.constants.at("ratio") == doctest::Approx(1).epsilon(1e-14));
}

TEST_CASE("verify: sparse form ratio with g = 0") {
    const GridSpec spec{1, 2, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {0}, {0}}, Flavor::stopping_time);
    const ProbeReport rep = sparse_form_ratio(identity_operator(), indicator(spec, 0, 1), GridFunction(spec), S, {2, 2});
    CHECK(rep.pass);
    CHECK(rep.constants.at("pairing") == 0);
    CHECK(rep.constants.at("sparse_form") == 0);
    CHECK(rep.constants.at("ratio") == 0);
}

TEST_CASE("verify: vanishing sparse form with nonzero pairing is flagged") {
    const GridSpec spec{1, 2, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {2}, {0}}, Flavor::stopping_time);
    const GridFunction f = indicator(spec, 0, 1);
    const ProbeReport rep = sparse_form_ratio(identity_operator(), f, f, S, {2, 2});
    CHECK_FALSE(rep.pass);
}

TEST_CASE("verify: identity with stopping-time collections has ratio at most 1 at r = s' = 2") {
    const GridSpec spec{1, 2, 6};
    const auto corpus = make_corpus(spec, 11, 8);
    StoppingConfig cfg;
    cfg.r = 2;
    cfg.s_prime = 2;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const SparseCollection S = build_stopping_time(corpus[i], corpus[i + 1], cfg);
        const ProbeReport rep = sparse_form_ratio(identity_operator(), corpus[i], corpus[i + 1], S, {2, 2});
        CHECK(rep.pass);
        CHECK(rep.constants.at("ratio") <= 1 + 1e-12);
    }
}

TEST_CASE("verify: sparse form ratio is invariant under scaling f and g") {
    const GridSpec spec{1, 2, 6};
    const auto corpus = make_corpus(spec, 5, 4);
    StoppingConfig cfg;
    cfg.r = 2;
    cfg.s_prime = 2;
    const Operator T = symbol_operator(bessel(-1), truncation_cut(default_J(spec)));
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const SparseCollection S = build_stopping_time(corpus[i], corpus[i + 1], cfg);
        const double base = sparse_form_ratio(T, corpus[i], corpus[i + 1], S, {2, 2}).constants.at("ratio");
        for (double lam : {1e-3, 0.7, 250.0}) {
            const double r = sparse_form_ratio(T, cplx(lam) * corpus[i], cplx(1 / (3 * lam)) * corpus[i + 1], S, {2, 2})
                                 .constants.at("ratio");
            CHECK(r == doctest::Approx(base).epsilon(1e-10));
        }
    }
}

TEST_CASE("verify: pointwise domination of a third by its cube") {
    for (int n : {1, 2}) {
        const GridSpec spec{n, 2, 4};
        DyadicCube c{0, std::vector<std::int64_t>(static_cast<std::size_t>(n), 0), std::vector<int>(static_cast<std::size_t>(n), 0)};
        // Q = [-1,2)^n and f = χ_{[0,1)^n}
        SparseCollection S = single(spec, c, Flavor::stopping_time);
        S.entries[0].box = concentric_dilate(c, Rational(3));
        const GridFunction f = indicator(spec, 0, 1);
        const ProbeReport rep = pointwise_domination_check(identity_operator(), f, S, 1);
        CHECK(rep.pass);
        CHECK(rep.constants.at("C") == doctest::Approx(std::pow(3.0, n)).epsilon(1e-12));
        CHECK(rep.constants.at("flagged") == 0);
    }
}

TEST_CASE("verify: pointwise domination of the zero function") {
    const GridSpec spec{1, 2, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {0}, {0}}, Flavor::stopping_time);
    const ProbeReport rep = pointwise_domination_check(identity_operator(), GridFunction(spec), S, 1);
    CHECK(rep.pass);
    CHECK(rep.constants.at("C") == 0);
}

TEST_CASE("verify: pointwise domination constant is invariant under f -> lambda f") {
    const GridSpec spec{1, 2, 6};
    const auto corpus = make_corpus(spec, 3, 4);
    StoppingConfig cfg;
    cfg.r = 1;
    cfg.s_prime = 1;
    cfg.k0 = -spec.K - 2;
    const Operator T = symbol_operator(bessel(-1), truncation_cut(default_J(spec)));
    for (const auto& f : corpus) {
        const SparseCollection S = build_stopping_time(f, GridFunction(spec), cfg);
        const double base = pointwise_domination_check(T, f, S, 1).constants.at("C");
        CHECK(std::isfinite(base));
        for (double lam : {1e-4, 3.0, 1e5})
            CHECK(pointwise_domination_check(T, cplx(lam) * f, S, 1).constants.at("C") ==
                  doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("verify: pointwise domination flags a missing cover") {
    const GridSpec spec{1, 2, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {1}, {0}}, Flavor::stopping_time);
    const ProbeReport rep = pointwise_domination_check(identity_operator(), indicator(spec, 0, 2), S, 1);
    CHECK_FALSE(rep.pass);
    CHECK(rep.constants.at("flagged") > 0);
}

TEST_CASE("verify: schur bound of the unit square kernel") {
    const GridSpec spec{1, 2, 4};
    const auto total = static_cast<Eigen::Index>(spec.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(total, total);
    const GridFunction probe(spec);
    for (Eigen::Index x = 0; x < total; ++x)
        for (Eigen::Index y = 0; y < total; ++y) {
            const double px = probe.point(static_cast<std::size_t>(x))[0], py = probe.point(static_cast<std::size_t>(y))[0];
            if (px >= 0 && px < 1 && py >= 0 && py < 1) A(x, y) = spec.h();
        }
    const Operator T = matrix_operator(A, "square");
    CHECK(schur_bound(T, spec, {2, 2}) == doctest::Approx(1).epsilon(1e-14));
    CHECK(top_singular_value(A) == doctest::Approx(1).epsilon(1e-12));
    CHECK(empirical_norm(T, spec, {2, 2}, 3, 1) == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("verify: schur bound of the point mass is 1") {
    const GridSpec spec{1, 2, 4};
    for (double r : {1.0, 1.5, 2.0, 4.0}) CHECK(schur_bound(identity_operator(), spec, {r, r}) == doctest::Approx(1).epsilon(1e-14));
    CHECK(schur_bound(identity_operator(), GridSpec{2, 1, 3}, {2, 2}) == doctest::Approx(1).epsilon(1e-14));
}

TEST_CASE("verify: empirical norm of the identity") {
    const GridSpec spec{1, 2, 5};
    for (double r : {1.0, 1.5, 2.0, 3.0, kInf}) {
        const NormEstimate e = estimate_norm(identity_operator(), spec, {r, r}, 3, 7);
        CHECK(e.value == doctest::Approx(1).epsilon(1e-9));
    }
}

TEST_CASE("verify: empirical norm of a multiplication operator") {
    const GridSpec spec{1, 2, 6};
    const XFactor phi = [](std::span<const double> x) { return cplx(1 + 0.5 * std::sin(3 * x[0]), 0.25 * std::cos(x[0])); };
    double top = 0;
    const GridFunction probe(spec);
    for (std::size_t i = 0; i < probe.size(); ++i) top = std::max(top, std::abs(phi(probe.point(i))));
    const NormEstimate e = estimate_norm(multiplication_operator(phi), spec, {2, 2}, 3, 2);
    CHECK(e.method == "lanczos");
    CHECK(e.value == doctest::Approx(top).epsilon(1e-6));
}

TEST_CASE("verify: L2 norms of bessel pieces match a dense singular value oracle") {
    const GridSpec spec{1, 3, 5};  // N = 2^9
    REQUIRE(spec.N() == 512);
    const SymbolClass a = bessel(-1);
    for (const PieceIndex idx : {PieceIndex{0, 0, 0.5}, PieceIndex{2, 1, 0.5}, PieceIndex{4, 0, 0.5}, PieceIndex{3, 2, 0.5}}) {
        const Operator T = piece_operator(a, idx, {false, false});
        const double oracle = top_singular_value(dense_matrix(T, spec));
        const NormEstimate e = estimate_norm(T, spec, {2, 2}, 3, 9);
        CHECK(e.value == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("verify: adjoint of a separable x-dependent symbol") {
    const GridSpec spec{1, 2, 4};
    const XFactor b = [](std::span<const double> x) { return cplx(std::cos(x[0]), 0.3 * std::sin(2 * x[0])); };
    SymbolClass a = custom([](std::span<const double>, std::span<const double>) { return cplx(0); }, -1, 1, 0);
    a.set_factors(b, [](std::span<const double> xi) { return cplx(std::pow(1 + xi[0] * xi[0], -0.5), 0.2 * xi[0] / (1 + xi[0] * xi[0])); });
    for (const Radial& w : {Radial{}, localization_window(1)}) {
        const Operator T = symbol_operator(a, truncation_cut(default_J(spec)), w, {false, false});
        REQUIRE(T.adjoint);
        const Eigen::MatrixXcd A = dense_matrix(T, spec);
        Operator adj;
        adj.apply = T.adjoint;
        const Eigen::MatrixXcd B = dense_matrix(adj, spec);
        CHECK((A.adjoint() - B).cwiseAbs().maxCoeff() < 1e-12 * A.cwiseAbs().maxCoeff());
        // rows agree with the matrix
        for (std::size_t x : {0ul, 17ul, 40ul}) {
            const auto r = T.row(spec, x);
            double d = 0;
            for (std::size_t y = 0; y < r.size(); ++y) d = std::max(d, std::abs(r[y] - A(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))));
            CHECK(d < 1e-12 * A.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("verify: empirical norm never exceeds the schur bound") {
    const GridSpec spec{1, 3, 5};
    const std::vector<ExponentPair> exps{{2, 2}, {1, kInf}, {2, kInf}, {4.0 / 3, 4}, {1, 2}, {1.5, 1.5}};
    for (const SymbolClass& a : {bessel(-1), bessel(-0.5, 0.5, 0.5), oscillatory_ct(0.5, -0.5)})
        for (const PieceIndex idx : {PieceIndex{1, 0, 0.4}, PieceIndex{3, 1, 0.4}, PieceIndex{5, 0, 0.4}})
            for (const auto& e : exps) {
                const double lower = empirical_norm(piece_operator(a, idx, {false, false}), spec, e, 4, 3);
                const double upper = schur_bound(a, idx, spec, e);
                CHECK(lower <= upper + 1e-8);
            }
}

TEST_CASE("verify: row_sup is exact at s = infinity") {
    const GridSpec spec{1, 2, 4};
    const Operator T = piece_operator(bessel(-1), {2, 0, 0.5}, {false, false});
    const Eigen::MatrixXcd A = dense_matrix(T, spec);
    for (double r : {1.0, 2.0}) {
        const NormEstimate e = estimate_norm(T, spec, {r, kInf}, 2, 1);
        CHECK(e.method == "row_sup");
        // oracle: max_x ‖A[x,·]‖ in the dual h-weighted norm
        double best = 0;
        for (Eigen::Index x = 0; x < A.rows(); ++x) {
            const Eigen::VectorXd row = A.row(x).cwiseAbs().transpose() / spec.h();
            best = std::max(best, r == 1 ? row.maxCoeff() : std::sqrt(row.squaredNorm() * spec.h()));
        }
        CHECK(e.value == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("verify: predicted exponents") {
    const SymbolClass a = bessel(-1, 0.5, 0.75);
    CHECK(predicted_norm_exponent(a, 1, {1, kInf}, 0.4) == doctest::Approx(0));
    CHECK(predicted_norm_exponent(a, 1, {2, kInf}, 0.4) == doctest::Approx(-0.5));
    // μ = max{0, 0.25/4, -0.1/4}
    CHECK(predicted_norm_exponent(a, 2, {4.0 / 3, 4}, 0.4) == doctest::Approx(-1 + 2 * 0.0625 + 2 * 0.5));
}

TEST_CASE("verify: j-scaling of bessel piece norms stays below the predicted exponents") {
    const GridSpec spec{1, 3, 6};
    for (double m : {-1.5, -1.0, -0.5}) {
        const SymbolClass a = bessel(m);
        ScalingConfig cfg;
        cfg.indices = {2, 3, 4, 5, 6};
        cfg.nu = default_nu(a.rho());
        for (const ExponentPair e : {ExponentPair{1, kInf}, ExponentPair{2, kInf}}) {
            const NormFit fit = norm_scaling_fit(a, spec, e, cfg);
            CHECK(fit.method == "row_sup");
            CHECK(fit.predicted == doctest::Approx(m + 1 / e.r));
            CHECK(fit.pass);
            CHECK(fit.fitted <= fit.predicted + 0.3);
            CHECK(fit.report("fit").pass);
        }
    }
}

TEST_CASE("verify: l-scaling of piece norms decays superpolynomially") {
    const GridSpec spec{1, 6, 4};
    ScalingConfig cfg;
    cfg.axis = ScalingAxis::l;
    cfg.fixed = 3;
    cfg.nu = 0.5;
    cfg.indices = {1, 2, 3, 4, 5, 6, 7, 8};
    const NormFit fit = norm_scaling_fit(bessel(-1), spec, {2, 2}, cfg);
    CHECK(fit.pass);
    CHECK(fit.fitted <= -5);
    // the decay steepens: the whole-range slope is shallower than the tail
    CHECK(fit.full_slope > fit.fitted);
}

TEST_CASE("verify: kernel decay of a bessel piece") {
    const GridSpec spec{1, 5, 6};
    const ProbeReport rep = kernel_decay_fit(bessel(-1), spec, 5, {1, 2, 3, 4, 5, 6, 7, 8}, 0.5, 4);
    CHECK(rep.pass);
    REQUIRE(rep.slopes.size() == 1);
    CHECK(rep.slopes[0].fitted <= -8);
    CHECK_THROWS_AS(kernel_decay_fit(bessel(-1, 0.5, 0), spec, 5, {1, 2}, 0.5, 4), Error);
}

TEST_CASE("verify: multiplication kernels vanish off the diagonal window") {
    const GridSpec spec{1, 2, 5};
    const SymbolClass a = multiplication([](std::span<const double> x) { return cplx(1 + x[0] * x[0]); });
    for (int l = 1; l <= 3; ++l) {
        const KernelSlice s = kernel_slice(a, Radial{}, piece_window_radial({0, l, 0}), 40, spec);
        CHECK(s.sup() < 1e-8);
    }
}

TEST_CASE("verify: kernel difference for identical points vanishes") {
    const GridSpec spec{1, 4, 6};
    const SymbolClass a = bessel(-0.75);
    DecayProbeConfig cfg;
    cfg.h = midpoint_h(a, 1, 2);
    cfg.js = {0, 1, 2, 3, 4};
    const std::size_t xb = cell_at(spec, 0.0);
    const ProbeReport rep = kernel_difference_probe(a, spec, xb, xb, cfg);
    CHECK(rep.pass);
    CHECK(rep.constants.at("max_value") == 0);
    for (const auto& row : rep.series.at("difference")) CHECK(row[1] == 0);
}

TEST_CASE("verify: kernel difference j-slope for bessel(-0.75)") {
    const GridSpec spec{1, 4, 6};
    const SymbolClass a = bessel(-0.75);
    DecayProbeConfig cfg;
    cfg.h = midpoint_h(a, 1, 2);
    CHECK(cfg.h == doctest::Approx(0.25));
    cfg.js = {0, 1, 2, 3, 4, 5, 6};
    const std::size_t xb = cell_at(spec, 0.0);
    const std::size_t x = xb + 8;  // |x - x_B| = 1/8 = τ
    for (std::optional<int> l1 : {std::optional<int>{}, std::optional<int>{3}}) {
        const ProbeReport rep = kernel_difference_probe(a, spec, x, xb, cfg, l1);
        CHECK(rep.pass);
        REQUIRE(rep.slopes.size() == 1);
        CHECK(rep.slopes[0].fitted <= -cfg.h + 0.5);
        CHECK(rep.inputs.at("skipped_j") == "6");
    }
}

TEST_CASE("verify: windowed and unwindowed differences agree on small annuli") {
    const GridSpec spec{1, 4, 6};
    const SymbolClass a = bessel(-0.75);
    DecayProbeConfig cfg;
    cfg.h = midpoint_h(a, 1, 2);
    cfg.js = {0, 1, 2, 3};  // outer radius + τ ≤ 2^{ℓ1-1} = 4
    const std::size_t xb = cell_at(spec, 0.0);
    const auto plain = kernel_difference_probe(a, spec, xb + 8, xb, cfg).series.at("difference");
    const auto windowed = kernel_difference_probe(a, spec, xb + 8, xb, cfg, 3).series.at("difference");
    REQUIRE(plain.size() == windowed.size());
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(windowed[i][1] == doctest::Approx(plain[i][1]).epsilon(1e-10));
}

TEST_CASE("verify: decay probe config validation") {
    const SymbolClass a = bessel(-0.75);
    DecayProbeConfig cfg;
    cfg.js = {1};
    cfg.h = 0.25;
    CHECK_NOTHROW(cfg.validate(a, 1));
    cfg.h = 0.9;
    CHECK_THROWS_AS(cfg.validate(a, 1), Error);
    cfg.h = 0.25;
    cfg.c1 = 0.4;
    CHECK_THROWS_AS(cfg.validate(a, 1), Error);
    cfg.c1 = 1;
    cfg.tau = 2;
    CHECK_THROWS_AS(cfg.validate(a, 1), Error);
}

TEST_CASE("verify: sharp ratio of a multiplication operator") {
    const GridSpec spec{1, 6, 3};
    const XFactor phi = [](std::span<const double> x) { return cplx(1 + 0.5 * std::cos(x[0])); };
    std::vector<GridFunction> corpus;
    for (int i = 0; i < 3; ++i) corpus.push_back(indicator(spec, -4 + i, 3 + 2 * i, 1 + i));
    SharpRatioConfig cfg;
    cfg.l1s = {1, 2};
    cfg.l2s = {1, 3};
    const ProbeReport rep = sharp_ratio_probe(multiplication(phi), corpus, cfg);
    CHECK(rep.constants.at("R_max") <= 2 * 1.5 + 1e-9);
    CHECK(rep.constants.at("flagged") == 0);
}

TEST_CASE("verify: sharp ratio vanishes for constants under bessel(0)") {
    const GridSpec spec{1, 6, 3};
    GridFunction c(spec);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 2.5;
    SharpRatioConfig cfg;
    cfg.l1s = {1, 2};
    cfg.l2s = {1, 2};
    cfg.check_support = false;
    const ProbeReport rep = sharp_ratio_probe(bessel(0), {c}, cfg);
    CHECK(rep.constants.at("R_max") < 1e-12);
    CHECK(rep.pass);
}

TEST_CASE("verify: end-point audit of the identity on one cube") {
    const GridSpec spec{1, 3, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {0}, {0}}, Flavor::whitney);
    const GridFunction f = indicator(spec, 0, 1), g = indicator(spec, 0, 1);
    const AuditReport A = endpoint_audit(identity_operator(), f, g, S, {2, kInf});
    CHECK(A.report.pass);
    CHECK(A.base_residual < 1e-15);
    CHECK(A.A2 == doctest::Approx(1));
    CHECK(A.A3 == doctest::Approx(3));
    CHECK(A.C0 <= 9);
    CHECK(A.pairing <= A.C0 * A.sparse_form);
    CHECK(A.pairing == doctest::Approx(1));
}

TEST_CASE("verify: end-point audit of disjoint supports") {
    const GridSpec spec{1, 3, 5};
    SparseCollection S;
    S.flavor = Flavor::whitney;
    S.eta = 1.0 / 3;
    for (std::int64_t m : {0, 4}) {
        SparseEntry e;
        e.cube = DyadicCube{0, {m}, {0}};
        e.box = concentric_dilate(e.cube, Rational(3));
        S.entries.push_back(e);
    }
    finalize_collection(S, spec);
    const GridFunction f = indicator(spec, 0, 1), g = indicator(spec, 4, 5);
    const AuditReport A = endpoint_audit(identity_operator(), f, g, S, {2, kInf});
    CHECK(A.report.pass);
    CHECK(A.pairing == 0);
    CHECK(A.base_residual == 0);
}

TEST_CASE("verify: end-point audit rejects stopping-time collections") {
    const GridSpec spec{1, 3, 5};
    const SparseCollection S = single(spec, DyadicCube{0, {0}, {0}}, Flavor::stopping_time);
    const GridFunction f = indicator(spec, 0, 1);
    CHECK_FALSE(endpoint_audit(identity_operator(), f, f, S, {2, kInf}).report.pass);
}

TEST_CASE("verify: end-point audit of the sharp pipeline on a whitney collection") {
    const GridSpec spec{1, 4, 7};
    const SymbolClass a = bessel(-0.25, 0.5, 0.5);
    const auto corpus = make_corpus(spec, 21, 4);
    WhitneyConfig wc;
    wc.r = 2;
    wc.s_prime = 1;
    const Operator T = sharp_operator(localized_operator({a, wc.l1}), wc.l2);
    const SparseCollection S = build_whitney_sparse(corpus[0], corpus[1], wc);
    const AuditReport A = endpoint_audit(T, corpus[0], corpus[1], S, {2, kInf});
    for (const auto& v : A.report.violations) MESSAGE(v);
    CHECK(A.report.pass);
    CHECK(std::isfinite(A.C0));
    CHECK(A.base_residual < 1e-9);
    for (double v : {A.A1, A.A2, A.A3, A.A4}) CHECK(v >= 0);
}

TEST_CASE("verify: fit_line recovers a line") {
    const LineFit L = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(L.slope == doctest::Approx(2));
    CHECK(L.intercept == doctest::Approx(1));
    CHECK(L.residual < 1e-12);
}
