#include "sparselab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <set>
#include <sstream>

#include "sparselab/parallel.hpp"
#include "sparselab/pdo.hpp"
#include "sparselab/sparse.hpp"
#include "sparselab/verify.hpp"

#ifndef SPARSELAB_VERSION
#define SPARSELAB_VERSION "0.0.0"
#endif

namespace sparselab::lab {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string num_text(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::optional<double> parse_real(const std::string& t) {
    if (t == "inf" || t == "infinity") return kInf;
    try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        // fractions such as 4/3
        if (pos < t.size() && t[pos] == '/') {
            std::size_t p2 = 0;
            const double d = std::stod(t.substr(pos + 1), &p2);
            if (pos + 1 + p2 != t.size() || d == 0) return std::nullopt;
            return v / d;
        }
        if (pos != t.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<std::int64_t> parse_int(const std::string& t) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(t, &pos);
        if (pos != t.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what + " (command line)"),
      line_(line) {}

Config Config::parse(std::istream& is, const std::string& source) {
    Config c;
    c.source_ = source;
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string t = raw;
        const auto hash = t.find_first_of("#;");
        if (hash != std::string::npos) t = t.substr(0, hash);
        t = trim(t);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(source, line, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ConfigError(source, line, "empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "expected key = value");
        const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line, "missing key");
        if (section.empty()) throw ConfigError(source, line, "key '" + key + "' outside a section");
        const std::string full = section + "." + key;
        if (!known_keys().count(full)) throw ConfigError(source, line, "unknown key '" + full + "'");
        if (value.empty()) throw ConfigError(source, line, "missing value for '" + full + "'");
        if (c.entries_.count(full)) throw ConfigError(source, line, "duplicate key '" + full + "'");
        c.entries_[full] = {value, line};
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config");
    return parse(in, path);
}

const Config::Entry* Config::find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw ConfigError(source_, 0, "unknown key '" + key + "'");
    entries_[key] = {value, 0};
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, e] : entries_) out += k + " = " + e.value + "\n";
    return out;
}

std::uint64_t Config::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void Config::error(const std::string& key, const std::string& what) const {
    const Entry* e = find(key);
    throw ConfigError(source_, e ? e->line : 0, what);
}

const std::map<std::string, std::string>& known_keys() {
    static const std::map<std::string, std::string> keys{
        {"grid.n", "int"},           {"grid.K", "int"},           {"grid.kappa", "int"},
        {"symbol.family", "text"},   {"symbol.m", "real"},        {"symbol.rho", "real"},
        {"symbol.delta", "real"},    {"symbol.l1", "int"},        {"symbol.l2", "real"},
        {"exponents.r", "real"},     {"exponents.s", "real"},     {"pieces.nu", "real"},
        {"pieces.j", "list"},        {"pieces.l", "list"},        {"pieces.fixed_j", "int"},
        {"pieces.fixed_l", "int"},   {"pieces.trials", "int"},    {"sparse.flavor", "text"},
        {"sparse.eta", "real"},      {"corpus.seed", "int"},      {"corpus.count", "int"},
        {"probes.suite", "text"},    {"probes.list", "list"},     {"tolerances.slope", "real"},
        {"tolerances.l_slope", "real"}, {"tolerances.variation", "real"}, {"tolerances.n_target", "real"},
        {"decay.tau", "real"},       {"decay.theta", "real"},     {"decay.p", "real"},
        {"decay.h", "real"},         {"decay.c1", "real"},        {"decay.c2", "real"},
        {"decay.j", "list"},         {"sharp.p", "real"},         {"sharp.l1", "list"},
        {"sharp.l2", "list"},        {"output.dir", "text"},
    };
    return keys;
}

std::string resolve_axis(const std::string& axis) {
    const auto& keys = known_keys();
    if (keys.count(axis)) return axis;
    std::vector<std::string> hits;
    for (const auto& [k, kind] : keys)
        if (k.substr(k.find('.') + 1) == axis) hits.push_back(k);
    if (hits.size() == 1) return hits.front();
    if (hits.empty()) throw ConfigError("sweep", 0, "unknown axis '" + axis + "'");
    throw ConfigError("sweep", 0, "ambiguous axis '" + axis + "'; use section.key");
}

const std::vector<std::string>& identity_suite() {
    static const std::vector<std::string> s{"identity_norm", "identity_operator", "identity_schur", "identity_sparse_form"};
    return s;
}

const std::vector<std::string>& probe_names() {
    static const std::vector<std::string> s{
        "endpoint_audit",     "identity_norm",  "identity_operator",          "identity_schur",
        "identity_sparse_form", "kernel_decay",  "kernel_difference",          "kernel_difference_windowed",
        "norm_scaling_j",     "norm_scaling_l", "pointwise_domination",       "schur_dominance",
        "sharp_ratio",        "sparse_form",    "sparsity",
    };
    return s;
}

RunSettings resolve(const Config& cfg) {
    RunSettings s;
    auto real = [&](const std::string& key, double& dst) {
        if (const auto* e = cfg.find(key)) {
            const auto v = parse_real(e->value);
            if (!v) cfg.error(key, "expected a number for '" + key + "'");
            dst = *v;
        }
    };
    auto opt_real = [&](const std::string& key, std::optional<double>& dst) {
        if (cfg.find(key)) {
            double v = 0;
            real(key, v);
            dst = v;
        }
    };
    auto integer = [&](const std::string& key, auto& dst) {
        if (const auto* e = cfg.find(key)) {
            const auto v = parse_int(e->value);
            if (!v) cfg.error(key, "expected an integer for '" + key + "'");
            dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
        }
    };
    auto int_list = [&](const std::string& key, std::vector<int>& dst) {
        const auto* e = cfg.find(key);
        if (!e) return;
        dst.clear();
        const auto dots = e->value.find("..");
        if (dots != std::string::npos) {
            const auto a = parse_int(trim(e->value.substr(0, dots))), b = parse_int(trim(e->value.substr(dots + 2)));
            if (!a || !b || *b < *a) cfg.error(key, "bad range for '" + key + "'");
            for (auto i = *a; i <= *b; ++i) dst.push_back(static_cast<int>(i));
            return;
        }
        for (const auto& t : split_list(e->value)) {
            const auto v = parse_int(t);
            if (!v) cfg.error(key, "expected integers for '" + key + "'");
            dst.push_back(static_cast<int>(*v));
        }
        if (dst.empty()) cfg.error(key, "empty list for '" + key + "'");
    };
    auto text = [&](const std::string& key, std::string& dst) {
        if (const auto* e = cfg.find(key)) dst = e->value;
    };

    integer("grid.n", s.grid.n);
    integer("grid.K", s.grid.K);
    integer("grid.kappa", s.grid.kappa);
    if (s.grid.n != 1 && s.grid.n != 2) cfg.error("grid.n", "dimension must be 1 or 2");
    if (s.grid.K < 1) cfg.error("grid.K", "K must be at least 1");
    if (s.grid.kappa < 1) cfg.error("grid.kappa", "kappa must be at least 1");
    if (s.grid.n * (s.grid.K + s.grid.kappa + 1) > 24) cfg.error("grid.kappa", "grid too large");

    text("symbol.family", s.family);
    static const std::set<std::string> families{"identity", "bessel", "oscillatory_ct", "rough_bump", "multiplication"};
    if (!families.count(s.family)) cfg.error("symbol.family", "unknown symbol family '" + s.family + "'");
    real("symbol.m", s.m);
    opt_real("symbol.rho", s.rho);
    opt_real("symbol.delta", s.delta);
    integer("symbol.l1", s.l1);
    real("symbol.l2", s.l2);
    if (s.rho && !(*s.rho > 0 && *s.rho <= 1)) cfg.error("symbol.rho", "rho must lie in (0,1]");
    if (s.delta && !(*s.delta >= 0 && *s.delta < 1)) cfg.error("symbol.delta", "delta must lie in [0,1)");
    if (s.l1 < 0) cfg.error("symbol.l1", "l1 must be nonnegative");
    if (!(s.l2 >= 1)) cfg.error("symbol.l2", "l2 must be at least 1");

    real("exponents.r", s.r);
    real("exponents.s", s.s);
    if (!(s.r >= 1)) cfg.error("exponents.r", "exponent r must be at least 1");
    if (!(s.r <= s.s)) cfg.error(cfg.find("exponents.s") ? "exponents.s" : "exponents.r", "exponents violate r ≤ s");

    real("pieces.nu", s.nu);
    if (!(s.nu >= 0 && s.nu < 1)) cfg.error("pieces.nu", "nu must lie in [0,1)");
    int_list("pieces.j", s.js);
    int_list("pieces.l", s.ls);
    integer("pieces.fixed_j", s.fixed_j);
    integer("pieces.fixed_l", s.fixed_l);
    integer("pieces.trials", s.trials);
    if (s.trials < 1) cfg.error("pieces.trials", "trials must be at least 1");
    for (int j : s.js)
        if (j < 0) cfg.error("pieces.j", "piece indices must be nonnegative");
    for (int l : s.ls)
        if (l < 1) cfg.error("pieces.l", "window indices start at 1");

    text("sparse.flavor", s.flavor);
    if (s.flavor != "stopping_time" && s.flavor != "whitney") cfg.error("sparse.flavor", "unknown flavor '" + s.flavor + "'");
    real("sparse.eta", s.eta);
    if (!(s.eta > 0 && s.eta < 1)) cfg.error("sparse.eta", "eta must lie in (0,1)");

    integer("corpus.seed", s.seed);
    integer("corpus.count", s.count);
    if (s.count < 2) cfg.error("corpus.count", "corpus needs at least 2 functions");

    real("tolerances.slope", s.slope_tolerance);
    real("tolerances.l_slope", s.l_slope);
    real("tolerances.variation", s.variation);
    real("tolerances.n_target", s.n_target);

    real("decay.tau", s.tau);
    real("decay.theta", s.theta);
    real("decay.p", s.decay_p);
    opt_real("decay.h", s.h);
    real("decay.c1", s.c1);
    real("decay.c2", s.c2);
    int_list("decay.j", s.decay_js);
    real("sharp.p", s.sharp_p);
    int_list("sharp.l1", s.sharp_l1);
    int_list("sharp.l2", s.sharp_l2);
    if (!(s.sharp_p > 1 && s.sharp_p <= 2)) cfg.error("sharp.p", "sharp exponent must lie in (1,2]");
    text("output.dir", s.out);

    std::set<std::string> chosen;
    if (const auto* e = cfg.find("probes.suite")) {
        if (e->value == "identity") chosen.insert(identity_suite().begin(), identity_suite().end());
        else if (e->value == "all") chosen.insert(probe_names().begin(), probe_names().end());
        else cfg.error("probes.suite", "unknown suite '" + e->value + "'");
    }
    if (const auto* e = cfg.find("probes.list"))
        for (const auto& p : split_list(e->value)) {
            if (std::find(probe_names().begin(), probe_names().end(), p) == probe_names().end())
                cfg.error("probes.list", "unknown probe '" + p + "'");
            chosen.insert(p);
        }
    if (chosen.empty()) throw ConfigError(cfg.source(), 0, "no probes listed");
    s.probes.assign(chosen.begin(), chosen.end());

    // symbol-specific checks
    try {
        if (s.family == "bessel" && (s.rho || s.delta)) bessel(s.m, s.rho.value_or(1), s.delta.value_or(0));
    } catch (const Error& ex) {
        cfg.error("symbol.rho", ex.what());
    }
    return s;
}

namespace {

SymbolClass make_symbol(const RunSettings& s) {
    if (s.family == "identity") return bessel(0);
    if (s.family == "bessel") return s.rho || s.delta ? bessel(s.m, s.rho.value_or(1), s.delta.value_or(0)) : bessel(s.m);
    if (s.family == "oscillatory_ct") return oscillatory_ct(s.rho.value_or(0.5), s.m);
    if (s.family == "rough_bump") return rough_bump(s.m, s.rho.value_or(1));
    return multiplication([](std::span<const double> x) { return cplx(1 + 0.5 * std::cos(x[0])); });
}

ExponentPair exps_of(const RunSettings& s) { return {s.r, s.s}; }

Operator full_operator(const SymbolClass& a, const GridSpec& spec) {
    return symbol_operator(a, truncation_cut(default_J(spec)));
}

void merge_failures(ProbeReport& into, const ProbeReport& from, const std::string& tag) {
    for (const auto& v : from.violations) into.fail(tag + ": " + v);
}

void common_inputs(ProbeReport& r, const RunSettings& s) {
    r.inputs["grid"] = "n=" + std::to_string(s.grid.n) + " K=" + std::to_string(s.grid.K) +
                       " kappa=" + std::to_string(s.grid.kappa);
    r.inputs["seed"] = std::to_string(s.seed);
}

ProbeReport probe_identity_operator(const RunSettings& s) {
    ProbeReport r;
    const SymbolClass one = bessel(0);
    double err = 0;
    for (const auto& f : make_corpus(s.grid, s.seed, s.count)) err = std::max(err, max_abs_diff(apply(one, f), f));
    r.constants["max_error"] = err;
    if (!(err < 1e-10)) r.fail("T_1 f differs from f by " + num_text(err));
    return r;
}

ProbeReport probe_identity_norm(const RunSettings& s) {
    ProbeReport r;
    const auto e = estimate_norm(symbol_operator(bessel(0), {}, {}, {false, false}), s.grid, {2, 2}, s.trials, s.seed);
    r.inputs["method"] = e.method;
    r.constants["norm"] = e.value;
    if (!(std::abs(e.value - 1) < 1e-6)) r.fail("norm of T_1 is " + num_text(e.value));
    return r;
}

ProbeReport probe_identity_schur(const RunSettings& s) {
    ProbeReport r;
    double worst = 0;
    for (double p : {1.0, 2.0, 4.0}) {
        const double b = schur_bound(symbol_operator(bessel(0), {}, {}, {false, false}), s.grid, {p, p});
        worst = std::max(worst, std::abs(b - 1));
        r.series["bound"].push_back({p, b});
    }
    r.constants["max_deviation"] = worst;
    if (!(worst < 1e-10)) r.fail("schur bound of the point mass differs from 1 by " + num_text(worst));
    return r;
}

ProbeReport probe_identity_sparse_form(const RunSettings& s) {
    ProbeReport r;
    const auto corpus = make_corpus(s.grid, s.seed, s.count);
    StoppingConfig sc;
    sc.r = 2;
    sc.s_prime = 2;
    double worst = 0;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const SparseCollection S = build_stopping_time(corpus[i], corpus[i + 1], sc);
        const ProbeReport q = sparse_form_ratio(identity_operator(), corpus[i], corpus[i + 1], S, {2, 2});
        merge_failures(r, q, "pair " + std::to_string(i));
        worst = std::max(worst, q.constants.at("ratio"));
        r.series["ratio"].push_back({static_cast<double>(i), q.constants.at("ratio")});
    }
    r.constants["ratio_max"] = worst;
    if (!(worst <= 1 + 1e-12)) r.fail("identity ratio " + num_text(worst) + " exceeds 1");
    return r;
}

ProbeReport probe_sparse_form(const RunSettings& s) {
    ProbeReport r;
    const auto corpus = make_corpus(s.grid, s.seed, s.count);
    const Operator T = full_operator(make_symbol(s), s.grid);
    const ExponentPair e = exps_of(s);
    double worst = 0;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        SparseCollection S;
        if (s.flavor == "whitney") {
            WhitneyConfig wc;
            wc.r = s.r;
            wc.s_prime = e.s_prime();
            wc.eta = s.eta;
            S = build_whitney_sparse(corpus[i], corpus[i + 1], wc);
        } else {
            StoppingConfig sc;
            sc.r = s.r;
            sc.s_prime = e.s_prime();
            S = build_stopping_time(corpus[i], corpus[i + 1], sc);
        }
        const ProbeReport q = sparse_form_ratio(T, corpus[i], corpus[i + 1], S, e);
        merge_failures(r, q, "pair " + std::to_string(i));
        worst = std::max(worst, q.constants.at("ratio"));
        r.series["ratio"].push_back({static_cast<double>(i), q.constants.at("ratio"), static_cast<double>(S.entries.size())});
    }
    r.constants["ratio_max"] = worst;
    if (!std::isfinite(worst)) r.fail("ratio is not finite");
    return r;
}

ProbeReport probe_pointwise(const RunSettings& s) {
    ProbeReport r;
    const auto corpus = make_corpus(s.grid, s.seed, s.count);
    const Operator T = full_operator(make_symbol(s), s.grid);
    StoppingConfig sc;
    sc.r = s.r;
    sc.s_prime = 1;
    sc.k0 = -s.grid.K - 2;  // roots cover the whole domain, so the sum is positive everywhere
    double worst = 0;
    const GridFunction zero(s.grid);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const SparseCollection S = build_stopping_time(corpus[i], zero, sc);
        const ProbeReport q = pointwise_domination_check(T, corpus[i], S, s.r);
        merge_failures(r, q, "function " + std::to_string(i));
        worst = std::max(worst, q.constants.at("C"));
        r.series["C"].push_back({static_cast<double>(i), q.constants.at("C"), q.constants.at("excluded")});
    }
    r.constants["C_max"] = worst;
    if (!std::isfinite(worst)) r.fail("domination constant is not finite");
    return r;
}

ProbeReport probe_sparsity(const RunSettings& s) {
    ProbeReport r;
    const auto corpus = make_corpus(s.grid, s.seed, s.count);
    const ExponentPair e = exps_of(s);
    double worst_st = 1, worst_w = 1;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        StoppingConfig sc;
        sc.r = s.r;
        sc.s_prime = e.s_prime();
        const SparseCollection A = build_stopping_time(corpus[i], corpus[i + 1], sc);
        const ProbeReport qa = verify_sparsity(A, 0.5);
        merge_failures(r, qa, "stopping pair " + std::to_string(i));
        WhitneyConfig wc;
        wc.r = s.r;
        wc.s_prime = e.s_prime();
        wc.eta = s.eta;
        const SparseCollection B = build_whitney_sparse(corpus[i], corpus[i + 1], wc);
        const ProbeReport qb = verify_sparsity(B, B.eta, &corpus[i], &corpus[i + 1]);
        merge_failures(r, qb, "whitney pair " + std::to_string(i));
        worst_st = std::min(worst_st, qa.constants.at("eta_measured"));
        worst_w = std::min(worst_w, qb.constants.at("eta_measured"));
        r.series["eta"].push_back({static_cast<double>(i), qa.constants.at("eta_measured"), qb.constants.at("eta_measured")});
    }
    r.constants["eta_stopping_time"] = worst_st;
    r.constants["eta_whitney"] = worst_w;
    r.constants["eta_whitney_target"] = std::pow(3.0, -s.grid.n) * s.eta;
    return r;
}

ProbeReport probe_schur_dominance(const RunSettings& s) {
    ProbeReport r;
    const SymbolClass a = make_symbol(s);
    const ExponentPair e = exps_of(s);
    double slack = kInf;
    for (int j : s.js) {
        const PieceIndex idx{j, s.fixed_l, s.nu};
        const double lower = empirical_norm(piece_operator(a, idx, {false, false}), s.grid, e, s.trials, s.seed);
        const double upper = schur_bound(a, idx, s.grid, e);
        slack = std::min(slack, upper - lower);
        r.series["norms"].push_back({static_cast<double>(j), lower, upper});
        if (!(lower <= upper + 1e-8)) r.fail("j = " + std::to_string(j) + ": empirical norm exceeds the schur bound");
    }
    r.constants["min_slack"] = slack;
    return r;
}

ProbeReport probe_norm_scaling(const RunSettings& s, ScalingAxis axis) {
    ScalingConfig c;
    c.axis = axis;
    c.indices = axis == ScalingAxis::j ? s.js : s.ls;
    c.fixed = axis == ScalingAxis::j ? s.fixed_l : s.fixed_j;
    c.nu = s.nu;
    c.trials = s.trials;
    c.seed = s.seed;
    c.tolerance = s.slope_tolerance;
    c.l_slope = s.l_slope;
    return norm_scaling_fit(make_symbol(s), s.grid, exps_of(s), c).report("");
}

ProbeReport probe_kernel_decay(const RunSettings& s) {
    return kernel_decay_fit(make_symbol(s), s.grid, s.fixed_j, s.ls, s.nu, s.n_target);
}

ProbeReport probe_kernel_difference(const RunSettings& s, bool windowed) {
    const SymbolClass a = make_symbol(s);
    DecayProbeConfig c;
    c.tau = s.tau;
    c.theta = s.theta;
    c.p = s.decay_p;
    c.h = s.h.value_or(midpoint_h(a, s.grid.n, s.decay_p));
    c.c1 = s.c1;
    c.c2 = s.c2;
    c.js = s.decay_js;
    const GridFunction probe(s.grid);
    std::vector<std::int64_t> ib(static_cast<std::size_t>(s.grid.n), s.grid.N() / 2);
    const std::size_t xb = probe.flat(ib);
    ib[0] += static_cast<std::int64_t>(std::floor(s.tau / s.grid.h()));
    const std::size_t x = probe.flat(ib);
    return kernel_difference_probe(a, s.grid, x, xb, c, windowed ? std::optional<int>(s.l1) : std::nullopt);
}

ProbeReport probe_sharp_ratio(const RunSettings& s) {
    SharpRatioConfig c;
    c.p = s.sharp_p;
    c.l1s = s.sharp_l1;
    c.l2s = s.sharp_l2;
    c.max_variation = s.variation;
    return sharp_ratio_probe(make_symbol(s), make_corpus(s.grid, s.seed, s.count), c);
}

ProbeReport probe_endpoint_audit(const RunSettings& s) {
    ProbeReport r;
    const auto corpus = make_corpus(s.grid, s.seed, s.count);
    const ExponentPair e = exps_of(s);
    WhitneyConfig wc;
    wc.r = s.r;
    wc.s_prime = e.s_prime();
    wc.eta = s.eta;
    wc.l1 = s.l1;
    wc.l2 = s.l2;
    const Operator T = sharp_operator(localized_operator({make_symbol(s), s.l1}), s.l2);
    double c0 = 0, ratio = 0;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
        const SparseCollection S = build_whitney_sparse(corpus[i], corpus[i + 1], wc);
        const AuditReport A = endpoint_audit(T, corpus[i], corpus[i + 1], S, e);
        merge_failures(r, A.report, "pair " + std::to_string(i));
        c0 = std::max(c0, A.C0);
        const double q = A.sparse_form > 0 ? A.pairing / A.sparse_form : 0;
        ratio = std::max(ratio, q);
        r.series["audit"].push_back({static_cast<double>(i), A.A1, A.A2, A.A3, A.A4, A.C0, q,
                                     static_cast<double>(A.rank_pairing.size())});
    }
    r.constants["C0_max"] = c0;
    r.constants["ratio_max"] = ratio;
    return r;
}

}  // namespace

ProbeReport run_probe(const std::string& name, const RunSettings& s) {
    ProbeReport r;
    if (name == "identity_operator") r = probe_identity_operator(s);
    else if (name == "identity_norm") r = probe_identity_norm(s);
    else if (name == "identity_schur") r = probe_identity_schur(s);
    else if (name == "identity_sparse_form") r = probe_identity_sparse_form(s);
    else if (name == "sparse_form") r = probe_sparse_form(s);
    else if (name == "pointwise_domination") r = probe_pointwise(s);
    else if (name == "sparsity") r = probe_sparsity(s);
    else if (name == "schur_dominance") r = probe_schur_dominance(s);
    else if (name == "norm_scaling_j") r = probe_norm_scaling(s, ScalingAxis::j);
    else if (name == "norm_scaling_l") r = probe_norm_scaling(s, ScalingAxis::l);
    else if (name == "kernel_decay") r = probe_kernel_decay(s);
    else if (name == "kernel_difference") r = probe_kernel_difference(s, false);
    else if (name == "kernel_difference_windowed") r = probe_kernel_difference(s, true);
    else if (name == "sharp_ratio") r = probe_sharp_ratio(s);
    else if (name == "endpoint_audit") r = probe_endpoint_audit(s);
    else throw Error("unknown probe '" + name + "'");
    r.name = name;
    common_inputs(r, s);
    return r;
}

std::vector<ProbeReport> run_probes(const RunSettings& s) {
    std::vector<std::string> names = s.probes;
    std::sort(names.begin(), names.end());
    std::vector<ProbeReport> out;
    for (const auto& n : names) {
        try {
            out.push_back(run_probe(n, s));
        } catch (const Error& ex) {
            ProbeReport r;
            r.name = n;
            common_inputs(r, s);
            r.fail(std::string("error: ") + ex.what());
            out.push_back(r);
        }
    }
    return out;
}

std::string code_version() { return std::string("sparselab ") + SPARSELAB_VERSION; }

nlohmann::json report_json(const ProbeReport& r, const Config& cfg, std::optional<double> seconds) {
    nlohmann::json j = to_json(r);
    std::ostringstream h;
    h << std::hex << std::setw(16) << std::setfill('0') << cfg.hash();
    j["config_hash"] = h.str();
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [k, e] : cfg.entries()) c[k] = e.value;
    j["config"] = c;
    j["code_version"] = code_version();
    j["timing_seconds"] = seconds ? nlohmann::json(*seconds) : nlohmann::json(nullptr);
    return j;
}

namespace {

struct Timed {
    ProbeReport report;
    std::optional<double> seconds;
};

std::vector<Timed> execute(const RunSettings& s, bool timing) {
    std::vector<std::string> names = s.probes;
    std::sort(names.begin(), names.end());
    std::vector<Timed> out;
    for (const auto& n : names) {
        const auto t0 = std::chrono::steady_clock::now();
        RunSettings one = s;
        one.probes = {n};
        Timed t{run_probes(one).front(), std::nullopt};
        if (timing) t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(t));
    }
    return out;
}

void summary_rows(std::ostream& os, const ProbeReport& r, const std::string& prefix) {
    const std::string pass = r.pass ? "1" : "0";
    for (const auto& [k, v] : r.constants) os << prefix << r.name << ',' << pass << ',' << k << ',' << num_text(v) << '\n';
    for (const auto& f : r.slopes)
        os << prefix << r.name << ',' << pass << ",slope:" << f.name << ',' << num_text(f.fitted) << '\n';
    os << prefix << r.name << ',' << pass << ",violations," << r.violations.size() << '\n';
}

// Returns the file names written, summary last.
std::vector<std::string> write_run(const fs::path& dir, const std::vector<Timed>& reports, const Config& cfg) {
    fs::create_directories(dir);
    std::vector<std::string> files;
    for (const auto& t : reports) {
        files.push_back(t.report.name + ".json");
        std::ofstream js(dir / files.back());
        js << report_json(t.report, cfg, t.seconds).dump(2) << '\n';
    }
    files.push_back("summary.csv");
    std::ofstream csv(dir / files.back());
    csv << "probe,pass,quantity,value\n";
    for (const auto& t : reports) summary_rows(csv, t.report, "");
    return files;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Byte comparison of a run directory against a golden one; returns the mismatch messages.
std::vector<std::string> golden_diff(const fs::path& run, const fs::path& golden, const std::vector<std::string>& files) {
    std::vector<std::string> out;
    if (!fs::is_directory(golden)) return {"golden directory " + golden.string() + " does not exist"};
    for (const auto& f : files) {
        if (!fs::exists(golden / f)) out.push_back("missing golden file " + f);
        else if (slurp(run / f) != slurp(golden / f)) out.push_back("golden mismatch in " + f);
    }
    std::set<std::string> expected(files.begin(), files.end());
    std::vector<std::string> stale;
    for (const auto& e : fs::directory_iterator(golden))
        if (e.is_regular_file() && !expected.count(e.path().filename().string()))
            stale.push_back("stale golden file " + e.path().filename().string());
    std::sort(stale.begin(), stale.end());
    out.insert(out.end(), stale.begin(), stale.end());
    return out;
}

Config prepared(const std::string& path, const Options& opt) {
    Config cfg = Config::load(path);
    if (opt.seed) cfg.set("corpus.seed", std::to_string(*opt.seed));
    return cfg;
}

fs::path out_dir(const RunSettings& s, const Options& opt) { return opt.out ? fs::path(*opt.out) : fs::path(s.out); }

}  // namespace

int cmd_run(const std::string& config_path, const Options& opt, std::ostream& out, std::ostream& err) {
    try {
        set_threads(opt.jobs);
        const Config cfg = prepared(config_path, opt);
        const RunSettings s = resolve(cfg);
        const auto reports = execute(s, opt.timing);
        const fs::path dir = out_dir(s, opt);
        const auto files = write_run(dir, reports, cfg);
        bool all = true;
        for (const auto& t : reports) {
            out << (t.report.pass ? "PASS " : "FAIL ") << t.report.name << '\n';
            for (const auto& v : t.report.violations) out << "  " << v << '\n';
            all = all && t.report.pass;
        }
        if (opt.golden && opt.update_golden) {
            const fs::path g(*opt.golden);
            if (fs::is_directory(g))
                for (const auto& e : fs::directory_iterator(g))
                    if (e.is_regular_file()) fs::remove(e.path());
            fs::create_directories(g);
            for (const auto& f : files) fs::copy_file(dir / f, g / f, fs::copy_options::overwrite_existing);
            out << "updated " << files.size() << " golden files in " << g.string() << '\n';
        } else if (opt.golden) {
            const auto diffs = golden_diff(dir, *opt.golden, files);
            for (const auto& d : diffs) err << d << '\n';
            if (diffs.empty()) out << "golden files match\n";
            all = all && diffs.empty();
        }
        return all ? 0 : 1;
    } catch (const ConfigError& ex) {
        err << ex.what() << '\n';
        return 2;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values, const Options& opt,
              std::ostream& out, std::ostream& err) {
    try {
        set_threads(opt.jobs);
        const std::string key = resolve_axis(axis);
        const std::string kind = known_keys().at(key);
        // integer lists (sharp.l1, pieces.j, ...) sweep one single-element list per value
        const bool int_list = kind == "list" && key != "probes.list";
        if (kind != "real" && kind != "int" && !int_list)
            throw ConfigError("sweep", 0, "axis '" + key + "' is not numeric");
        const auto list = split_list(values);
        if (list.empty()) throw ConfigError("sweep", 0, "empty value list");
        for (const auto& v : list)
            if (kind == "real" ? !parse_real(v) : !parse_int(v))
                throw ConfigError("sweep", 0, "bad sweep value '" + v + "'");

        const Config base = prepared(config_path, opt);
        // validate every point before running any
        std::vector<std::pair<Config, RunSettings>> points;
        for (const auto& v : list) {
            Config c = base;
            c.set(key, v);
            points.emplace_back(c, resolve(c));
        }
        const fs::path root = out_dir(points.front().second, opt);
        fs::create_directories(root);
        std::ofstream csv(root / "sweep.csv");
        csv << key << ",probe,pass,quantity,value\n";
        bool all = true;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto reports = execute(points[i].second, opt.timing);
            write_run(root / (key + "=" + list[i]), reports, points[i].first);
            for (const auto& t : reports) {
                summary_rows(csv, t.report, list[i] + ",");
                out << key << '=' << list[i] << ' ' << (t.report.pass ? "PASS " : "FAIL ") << t.report.name << '\n';
                all = all && t.report.pass;
            }
        }
        return all ? 0 : 1;
    } catch (const ConfigError& ex) {
        err << ex.what() << '\n';
        return 2;
    }
}

int cmd_corpus(const std::string& spec_path, const Options& opt, std::ostream& out, std::ostream& err) {
    try {
        const Config cfg = prepared(spec_path, opt);
        Config c = cfg;
        if (!c.find("probes.suite") && !c.find("probes.list")) c.set("probes.suite", "identity");
        const RunSettings s = resolve(c);
        const fs::path dir = out_dir(s, opt) / "corpus";
        fs::create_directories(dir);
        const auto corpus = make_corpus(s.grid, s.seed, s.count);
        std::ofstream manifest(dir / "manifest.csv");
        manifest << "index,kind,file,l2_norm,max_abs\n";
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const std::string file = std::to_string(i) + "_" + corpus_kind(static_cast<int>(i)) + ".bin";
            write_binary((dir / file).string(), corpus[i]);
            manifest << i << ',' << corpus_kind(static_cast<int>(i)) << ',' << file << ',' << num_text(lp_norm(corpus[i], 2))
                     << ',' << num_text(corpus[i].max_abs()) << '\n';
        }
        out << "wrote " << corpus.size() << " functions to " << dir.string() << '\n';
        return 0;
    } catch (const ConfigError& ex) {
        err << ex.what() << '\n';
        return 2;
    }
}

}  // namespace sparselab::lab
