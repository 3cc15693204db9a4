#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "sparselab/cli.hpp"

using namespace sparselab;
using namespace sparselab::lab;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SPARSELAB_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sparselab_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.ini";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Config parse_text(const std::string& text) {
    std::istringstream is(text);
    return Config::parse(is, "t.ini");
}

std::string parse_error(const std::string& text) {
    try {
        resolve(parse_text(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

int run(const fs::path& config, const fs::path& out, std::string* err = nullptr) {
    Options opt;
    opt.out = out.string();
    std::ostringstream o, e;
    const int code = cmd_run(config.string(), opt, o, e);
    if (err) *err = e.str();
    return code;
}

}  // namespace

TEST_CASE("config parsing anchors errors at their line") {
    CHECK(parse_error("[grid]\nn = 1\nfoo = 2\n") == "t.ini:3: unknown key 'grid.foo'");
    CHECK(parse_error("[grid]\nn = 1\nn = 2\n") == "t.ini:3: duplicate key 'grid.n'");
    CHECK(parse_error("[grid]\n\nK =\n") == "t.ini:3: missing value for 'grid.K'");
    CHECK(parse_error("n = 1\n").rfind("t.ini:1:", 0) == 0);
    CHECK(parse_error("[grid\n").rfind("t.ini:1:", 0) == 0);
    CHECK(parse_error("[grid]\nkappa = six\n").rfind("t.ini:2:", 0) == 0);
    // comments and blank lines are skipped
    const Config c = parse_text("# note\n\n[grid]\nK = 4   \n; other\n[symbol]\nm = -0.5\n");
    REQUIRE(c.find("grid.K"));
    CHECK(c.find("grid.K")->value == "4");
    CHECK(c.find("grid.K")->line == 4);
    CHECK(c.find("symbol.m")->line == 7);
}

TEST_CASE("r > s is rejected at the exponents line") {
    const fs::path bad = kSource / "tools/configs/bad_exponents.ini";
    try {
        resolve(Config::load(bad.string()));
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 8);
        CHECK(std::string(e.what()) == bad.string() + ":8: exponents violate r ≤ s");
    }
    const fs::path dir = scratch("bad");
    std::string err;
    CHECK(run(bad, dir, &err) == 2);
    CHECK(err.find("exponents violate r ≤ s") != std::string::npos);
    CHECK(fs::is_empty(dir));
}

TEST_CASE("sweep axes resolve bare keys only when unambiguous") {
    CHECK(resolve_axis("m") == "symbol.m");
    CHECK(resolve_axis("symbol.l1") == "symbol.l1");
    CHECK(resolve_axis("kappa") == "grid.kappa");
    CHECK_THROWS_AS(resolve_axis("l1"), ConfigError);  // symbol.l1 and sharp.l1
    CHECK_THROWS_AS(resolve_axis("nonsense"), ConfigError);
}

TEST_CASE("canonical text: sorted, order independent, round trips (generated configs)") {
    std::mt19937_64 rng(11);
    std::vector<std::string> keys;
    for (const auto& [k, kind] : known_keys())
        if (kind == "real" || kind == "int") keys.push_back(k);
    for (int t = 0; t < 40; ++t) {
        std::shuffle(keys.begin(), keys.end(), rng);
        const std::size_t take = 1 + rng() % 8;
        std::map<std::string, std::map<std::string, std::string>> sections;
        for (std::size_t i = 0; i < take; ++i) {
            const auto dot = keys[i].find('.');
            sections[keys[i].substr(0, dot)][keys[i].substr(dot + 1)] = std::to_string(rng() % 100);
        }
        std::string forward, backward;
        for (const auto& [sec, kv] : sections) {
            forward += "[" + sec + "]\n";
            for (const auto& [k, v] : kv) forward += k + " = " + v + "\n";
        }
        for (auto it = sections.rbegin(); it != sections.rend(); ++it) {
            backward += "[" + it->first + "]\n";
            for (auto jt = it->second.rbegin(); jt != it->second.rend(); ++jt)
                backward += jt->first + "=" + jt->second + "\n";
        }
        const Config a = parse_text(forward), b = parse_text(backward);
        CHECK(a.canonical() == b.canonical());
        CHECK(a.hash() == b.hash());
        CHECK(a.entries().size() == take);
        Config c = a;
        c.set(keys[0], "101");
        CHECK(c.hash() != a.hash());
        CHECK(c.find(keys[0])->line == 0);
    }
}

TEST_CASE("identity suite: four reports, embedded config, exit 0") {
    const fs::path out = scratch("identity");
    REQUIRE(run(kSource / "tools/configs/identity.ini", out) == 0);
    std::size_t reports = 0;
    for (const auto& e : fs::directory_iterator(out)) reports += e.path().extension() == ".json" ? 1 : 0;
    CHECK(reports == 4);
    const auto j = nlohmann::json::parse(slurp(out / "identity_norm.json"));
    CHECK(j["pass"] == true);
    CHECK(j["code_version"] == code_version());
    CHECK(j["config_hash"].get<std::string>().size() == 16);
    CHECK(j["config"]["grid.K"] == "3");
    CHECK(j["timing_seconds"].is_null());
    const auto rows = read_csv(out / "summary.csv");
    REQUIRE(!rows.empty());
    CHECK(rows[0] == std::vector<std::string>{"probe", "pass", "quantity", "value"});
}

TEST_CASE("same config and seed give byte-identical outputs") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const fs::path cfg = kSource / "tools/configs/bessel.ini";
    REQUIRE(run(cfg, a) == 0);
    REQUIRE(run(cfg, b) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
        ++files;
    }
    CHECK(files == 7);
}

TEST_CASE("golden files match the committed outputs") {
    for (const std::string name : {"identity", "bessel"}) {
        Options opt;
        opt.out = scratch("golden_" + name).string();
        opt.golden = (kSource / "tests/golden" / name).string();
        std::ostringstream o, e;
        CHECK_MESSAGE(cmd_run((kSource / "tools/configs" / (name + ".ini")).string(), opt, o, e) == 0, e.str());
    }
    // a different seed changes every report
    Options opt;
    opt.out = scratch("golden_seed").string();
    opt.golden = (kSource / "tests/golden/identity").string();
    opt.seed = 9;
    std::ostringstream o, e;
    CHECK(cmd_run((kSource / "tools/configs/identity.ini").string(), opt, o, e) == 1);
    CHECK(e.str().find("golden mismatch in summary.csv") != std::string::npos);
}

TEST_CASE("update-golden rewrites the directory and flags stale files") {
    const fs::path g = scratch("golden_dir");
    std::ofstream(g / "old_probe.json") << "{}";
    Options opt;
    opt.out = scratch("golden_run").string();
    opt.golden = g.string();
    std::ostringstream o, e;
    // compare first: stale file and missing files are reported
    CHECK(cmd_run((kSource / "tools/configs/identity.ini").string(), opt, o, e) == 1);
    CHECK(e.str().find("stale golden file old_probe.json") != std::string::npos);
    CHECK(e.str().find("missing golden file summary.csv") != std::string::npos);
    opt.update_golden = true;
    CHECK(cmd_run((kSource / "tools/configs/identity.ini").string(), opt, o, e) == 0);
    CHECK(!fs::exists(g / "old_probe.json"));
    opt.update_golden = false;
    std::ostringstream o2, e2;
    CHECK(cmd_run((kSource / "tools/configs/identity.ini").string(), opt, o2, e2) == 0);
    CHECK(e2.str().empty());
}

TEST_CASE("a failing probe exits 1") {
    const fs::path dir = scratch("fail");
    const fs::path cfg = write_config(dir, "[grid]\nK = 5\nkappa = 6\n[symbol]\nm = -1\n[pieces]\nnu = 0.5\n"
                                           "fixed_j = 5\nl = 1..6\n[tolerances]\nl_slope = -1000\n"
                                           "[probes]\nlist = norm_scaling_l\n");
    CHECK(run(cfg, dir / "out") == 1);
    const auto j = nlohmann::json::parse(slurp(dir / "out/norm_scaling_l.json"));
    CHECK(j["pass"] == false);
}

TEST_CASE("sweep of m below the sparse-form threshold: one block per value, all pass") {
    const fs::path dir = scratch("sweep_m");
    const fs::path cfg = write_config(dir, "[grid]\nK = 4\nkappa = 5\n[symbol]\nfamily = bessel\nm = -1\n"
                                           "[exponents]\nr = 2\ns = 2\n[corpus]\ncount = 3\n"
                                           "[probes]\nlist = sparse_form\n");
    Options opt;
    opt.out = (dir / "out").string();
    std::ostringstream o, e;
    REQUIRE(cmd_sweep(cfg.string(), "m", "-0.6,-0.5,-0.4,-0.3,-0.2,-0.1", opt, o, e) == 0);
    const auto rows = read_csv(dir / "out/sweep.csv");
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"symbol.m", "probe", "pass", "quantity", "value"});
    std::set<std::string> values;
    std::size_t ratio_rows = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        values.insert(rows[i][0]);
        CHECK(rows[i][2] == "1");
        if (rows[i][3] == "ratio_max") {
            ++ratio_rows;
            CHECK(std::stod(rows[i][4]) > 0);
        }
    }
    CHECK(values.size() == 6);
    CHECK(ratio_rows == 6);
    CHECK(fs::exists(dir / "out/symbol.m=-0.3/sparse_form.json"));
}

TEST_CASE("sweep of sharp.l1: R varies by less than a factor 2") {
    const fs::path dir = scratch("sweep_l1");
    const fs::path cfg = write_config(dir, "[grid]\nK = 5\nkappa = 4\n[symbol]\nfamily = bessel\nm = -0.25\n"
                                           "rho = 0.5\ndelta = 0.5\n[sharp]\np = 2\nl2 = 2\n[corpus]\ncount = 2\n"
                                           "[probes]\nlist = sharp_ratio\n");
    Options opt;
    opt.out = (dir / "out").string();
    std::ostringstream o, e;
    REQUIRE(cmd_sweep(cfg.string(), "sharp.l1", "1,2,3,4,5", opt, o, e) == 0);
    double lo = 1e300, hi = 0;
    std::size_t n = 0;
    for (const auto& row : read_csv(dir / "out/sweep.csv"))
        if (row.size() == 5 && row[3] == "R_max") {
            lo = std::min(lo, std::stod(row[4]));
            hi = std::max(hi, std::stod(row[4]));
            ++n;
        }
    CHECK(n == 5);
    CHECK(lo > 0);
    CHECK(hi / lo < 2);
}

TEST_CASE("sweep validation exits 2") {
    const fs::path cfg = kSource / "tools/configs/identity.ini";
    Options opt;
    opt.out = scratch("sweep_bad").string();
    for (const auto& [axis, values, msg] : std::vector<std::tuple<std::string, std::string, std::string>>{
             {"symbol.m", "", "empty value list"},
             {"symbol.m", " , ", "empty value list"},
             {"symbol.family", "bessel", "is not numeric"},
             {"probes.list", "sparsity", "is not numeric"},
             {"grid.kappa", "5.5", "bad sweep value"},
             {"l1", "1", "ambiguous"}}) {
        std::ostringstream o, e;
        CHECK(cmd_sweep(cfg.string(), axis, values, opt, o, e) == 2);
        CHECK_MESSAGE(e.str().find(msg) != std::string::npos, e.str());
    }
}

TEST_CASE("corpus dump round trips") {
    const fs::path out = scratch("corpus");
    Options opt;
    opt.out = out.string();
    std::ostringstream o, e;
    REQUIRE(cmd_corpus((kSource / "tools/configs/identity.ini").string(), opt, o, e) == 0);
    const auto expected = make_corpus(GridSpec{1, 3, 5}, 1, 4);
    const auto rows = read_csv(out / "corpus/manifest.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"index", "kind", "file", "l2_norm", "max_abs"});
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(rows[i + 1][1] == corpus_kind(static_cast<int>(i)));
        const GridFunction f = read_binary((out / "corpus" / rows[i + 1][2]).string());
        CHECK(f.spec() == expected[i].spec());
        CHECK(f.samples() == expected[i].samples());
    }
}
