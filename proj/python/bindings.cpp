#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sparselab/cli.hpp"
#include "sparselab/maximal.hpp"
#include "sparselab/pdo.hpp"
#include "sparselab/sparse.hpp"
#include "sparselab/verify.hpp"

namespace py = pybind11;
using namespace sparselab;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

std::vector<py::ssize_t> shape_of(const GridSpec& s) {
    return std::vector<py::ssize_t>(static_cast<std::size_t>(s.n), static_cast<py::ssize_t>(s.N()));
}

GridFunction from_array(const GridSpec& spec, const CArray& a) {
    spec.validate();
    if (a.ndim() != spec.n) throw Error("array rank does not match the grid dimension");
    for (py::ssize_t d = 0; d < a.ndim(); ++d)
        if (a.shape(d) != spec.N()) throw Error("array shape does not match the grid");
    return GridFunction(spec, std::vector<cplx>(a.data(), a.data() + a.size()));
}

CArray to_array(const GridFunction& f) {
    CArray out(shape_of(f.spec()));
    std::copy(f.samples().begin(), f.samples().end(), out.mutable_data());
    return out;
}

py::object to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

ExponentPair exps(double r, double s) {
    ExponentPair e{r, s};
    e.validate();
    return e;
}

}  // namespace

PYBIND11_MODULE(_sparselab, m) {
    m.doc() = "Sparse-domination experiments for pseudodifferential operators on periodic grids";
    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](int n, int K, int kappa) {
                 GridSpec s{n, K, kappa};
                 s.validate();
                 return s;
             }),
             py::arg("n") = 1, py::arg("K") = 2, py::arg("kappa") = 6)
        .def_readonly("n", &GridSpec::n)
        .def_readonly("K", &GridSpec::K)
        .def_readonly("kappa", &GridSpec::kappa)
        .def_property_readonly("N", &GridSpec::N)
        .def_property_readonly("h", &GridSpec::h)
        .def_property_readonly("L", &GridSpec::L)
        .def_property_readonly("shape", [](const GridSpec& s) { return shape_of(s); })
        .def("coords", [](const GridSpec& s) {
            py::array_t<double> x(s.N());
            for (std::int64_t i = 0; i < s.N(); ++i) x.mutable_at(i) = s.coord(i);
            return x;
        }, "Cell midpoints along one axis.")
        .def("__eq__", [](const GridSpec& a, const GridSpec& b) { return a == b; })
        .def("__repr__", [](const GridSpec& s) {
            return "GridSpec(n=" + std::to_string(s.n) + ", K=" + std::to_string(s.K) + ", kappa=" +
                   std::to_string(s.kappa) + ")";
        });

    py::class_<SymbolClass>(m, "Symbol")
        .def_property_readonly("family", [](const SymbolClass& a) { return to_string(a.family()); })
        .def_property_readonly("m", &SymbolClass::m)
        .def_property_readonly("rho", &SymbolClass::rho)
        .def_property_readonly("delta", &SymbolClass::delta)
        .def("__call__", [](const SymbolClass& a, std::vector<double> x, std::vector<double> xi) { return a(x, xi); });

    m.def("bessel", [](double order, std::optional<double> rho, std::optional<double> delta) {
        return rho || delta ? bessel(order, rho.value_or(1), delta.value_or(0)) : bessel(order);
    }, py::arg("m"), py::arg("rho") = py::none(), py::arg("delta") = py::none());
    m.def("oscillatory_ct", &oscillatory_ct, py::arg("rho"), py::arg("m0"));
    m.def("rough_bump", &rough_bump, py::arg("m"), py::arg("rho"));
    m.def("make_corpus", [](const GridSpec& s, std::uint64_t seed, int count) {
        py::list out;
        for (const auto& f : make_corpus(s, seed, count)) out.append(to_array(f));
        return out;
    }, py::arg("spec"), py::arg("seed") = 1, py::arg("count") = 4);
    m.def("corpus_kind", &corpus_kind);

    m.def("apply", [](const SymbolClass& a, const GridSpec& s, const CArray& f, bool force_direct) {
        return to_array(apply(a, from_array(s, f), {force_direct, true}));
    }, py::arg("symbol"), py::arg("spec"), py::arg("f"), py::arg("force_direct") = false);
    m.def("lp_piece_apply", [](const SymbolClass& a, const GridSpec& s, const CArray& f, int j) {
        return to_array(lp_piece_apply(a, j, from_array(s, f)));
    }, py::arg("symbol"), py::arg("spec"), py::arg("f"), py::arg("j"));
    m.def("spatial_piece_apply", [](const SymbolClass& a, const GridSpec& s, const CArray& f, int j, int l, double nu) {
        return to_array(spatial_piece_apply(a, {j, l, nu}, from_array(s, f)));
    }, py::arg("symbol"), py::arg("spec"), py::arg("f"), py::arg("j"), py::arg("l"), py::arg("nu"));

    m.def("maximal", [](const GridSpec& s, const CArray& f, double p, std::optional<double> cap) {
        return to_array(maximal_p(from_array(s, f), {Shape::ball, p, cap}));
    }, py::arg("spec"), py::arg("f"), py::arg("p") = 1.0, py::arg("radius_cap") = py::none());
    m.def("sharp_maximal", [](const GridSpec& s, const CArray& f, std::optional<double> cap) {
        return to_array(sharp_maximal(from_array(s, f), cap));
    }, py::arg("spec"), py::arg("f"), py::arg("radius_cap") = py::none());

    py::class_<SparseCollection>(m, "SparseCollection")
        .def_property_readonly("flavor", [](const SparseCollection& S) { return to_string(S.flavor); })
        .def_readonly("eta", &SparseCollection::eta)
        .def("__len__", [](const SparseCollection& S) { return S.entries.size(); })
        .def("cubes", [](const SparseCollection& S) {
            py::list out;
            for (const auto& e : S.entries) {
                py::dict d;
                d["k"] = e.cube.k;
                d["m"] = e.cube.m;
                d["omega"] = e.cube.omega;
                d["rank"] = e.rank;
                out.append(d);
            }
            return out;
        }, "Entries as dicts {k, m, omega, rank}; side 2**-k.")
        .def("to_text", [](const SparseCollection& S) {
            std::ostringstream os;
            write_text(os, S);
            return os.str();
        });

    m.def("stopping_time", [](const GridSpec& s, const CArray& f, const CArray& g, double r, double s_prime) {
        return build_stopping_time(from_array(s, f), from_array(s, g), {r, s_prime, {}, {}, {}, {}});
    }, py::arg("spec"), py::arg("f"), py::arg("g"), py::arg("r") = 1.0, py::arg("s_prime") = 1.0);
    m.def("whitney", [](const GridSpec& s, const CArray& f, const CArray& g, double r, double s_prime, double eta) {
        WhitneyConfig wc;
        wc.r = r;
        wc.s_prime = s_prime;
        wc.eta = eta;
        return build_whitney_sparse(from_array(s, f), from_array(s, g), wc);
    }, py::arg("spec"), py::arg("f"), py::arg("g"), py::arg("r") = 2.0, py::arg("s_prime") = 1.0, py::arg("eta") = 0.5);
    m.def("verify_sparsity", [](const SparseCollection& S, std::optional<double> eta) {
        return to_python(to_json(verify_sparsity(S, eta.value_or(S.eta))));
    }, py::arg("collection"), py::arg("eta") = py::none());
    m.def("sparse_form", [](const SparseCollection& S, const GridSpec& s, const CArray& f, const CArray& g, double r,
                            double s_prime) { return sparse_form(S, from_array(s, f), from_array(s, g), r, s_prime); },
          py::arg("collection"), py::arg("spec"), py::arg("f"), py::arg("g"), py::arg("r"), py::arg("s_prime"));

    m.def("sparse_form_ratio", [](const SymbolClass& a, const GridSpec& s, const CArray& f, const CArray& g, double r,
                                  double sexp) {
        const ExponentPair e = exps(r, sexp);
        const GridFunction F = from_array(s, f), G = from_array(s, g);
        const SparseCollection S = build_stopping_time(F, G, {e.r, e.s_prime(), {}, {}, {}, {}});
        const Operator T = symbol_operator(a, truncation_cut(default_J(s)));
        return to_python(to_json(sparse_form_ratio(T, F, G, S, e)));
    }, py::arg("symbol"), py::arg("spec"), py::arg("f"), py::arg("g"), py::arg("r"), py::arg("s"),
       "|<Tf, g>| over the stopping-time sparse form; returns the report as a dict.");
    m.def("piece_norm", [](const SymbolClass& a, const GridSpec& s, int j, int l, double nu, double r, double sexp,
                           int trials, std::uint64_t seed) {
        const NormEstimate est = estimate_norm(piece_operator(a, {j, l, nu}, {false, false}), s, exps(r, sexp), trials, seed);
        return py::make_tuple(est.value, est.method);
    }, py::arg("symbol"), py::arg("spec"), py::arg("j"), py::arg("l"), py::arg("nu"), py::arg("r") = 2.0,
       py::arg("s") = 2.0, py::arg("trials") = 4, py::arg("seed") = 1, "(norm, method) of T^{j,l} from L^r to L^s.");
    m.def("predicted_norm_exponent", [](const SymbolClass& a, int n, double r, double sexp, double nu) {
        return predicted_norm_exponent(a, n, exps(r, sexp), nu);
    }, py::arg("symbol"), py::arg("n"), py::arg("r"), py::arg("s"), py::arg("nu"));
    m.def("sharp_ratio", [](const SymbolClass& a, const GridSpec& s, std::uint64_t seed, int count, double p,
                            std::vector<int> l1s, std::vector<int> l2s) {
        SharpRatioConfig cfg;
        cfg.p = p;
        cfg.l1s = std::move(l1s);
        cfg.l2s = std::move(l2s);
        return to_python(to_json(sharp_ratio_probe(a, make_corpus(s, seed, count), cfg)));
    }, py::arg("symbol"), py::arg("spec"), py::arg("seed") = 1, py::arg("count") = 3, py::arg("p") = 2.0,
       py::arg("l1s") = std::vector<int>{1, 2, 3}, py::arg("l2s") = std::vector<int>{1, 2, 3});

    m.def("run_config", [](const std::string& path, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
        lab::Options opt;
        opt.out = out;
        opt.seed = seed;
        std::ostringstream o, e;
        const int code = lab::cmd_run(path, opt, o, e);
        return py::make_tuple(code, o.str(), e.str());
    }, py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
       "Runs a lab config; returns (exit_code, stdout, stderr).");

    m.attr("__version__") = SPARSELAB_VERSION;
}
