#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sparselab/error.hpp"
#include "sparselab/report.hpp"
#include "sparselab/sample.hpp"

namespace sparselab::lab {

/// Invalid configuration; line is 0 for values set on the command line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& source, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

/// Sectioned key = value text. Keys are addressed as "section.key".
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static Config parse(std::istream& is, const std::string& source = "<config>");
    static Config load(const std::string& path);

    const Entry* find(const std::string& key) const;
    /// Overrides (sweeps, --seed) are anchored at line 0.
    void set(const std::string& key, const std::string& value);

    /// Sorted "section.key = value" lines; the hash is FNV-1a of this text.
    std::string canonical() const;
    std::uint64_t hash() const;
    const std::string& source() const { return source_; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    [[noreturn]] void error(const std::string& key, const std::string& what) const;

private:
    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// Every accepted key with its kind: "int", "real", "text", "list".
const std::map<std::string, std::string>& known_keys();
/// Full name of a sweep axis; a bare key is accepted when unambiguous.
std::string resolve_axis(const std::string& axis);

/// Probes in canonical order.
const std::vector<std::string>& probe_names();
/// The "identity" suite: four a ≡ 1 oracle probes.
const std::vector<std::string>& identity_suite();

struct RunSettings {
    GridSpec grid;
    std::string family = "bessel";
    double m = -1;
    std::optional<double> rho, delta;
    int l1 = 1;
    double l2 = 1;
    double r = 2, s = 2;
    double nu = 0.5;
    std::vector<int> js{2, 3, 4, 5, 6};
    std::vector<int> ls{1, 2, 3, 4, 5, 6, 7, 8};
    int fixed_j = 3;
    int fixed_l = 0;
    std::string flavor = "stopping_time";
    double eta = 0.5;
    std::uint64_t seed = 1;
    int count = 4;
    int trials = 4;
    std::vector<std::string> probes;
    double slope_tolerance = 0.3;
    double l_slope = -5;
    double variation = 2;
    double n_target = 2.5;
    double tau = 0.125, theta = 1, decay_p = 2, c1 = 1, c2 = 1;
    std::optional<double> h;
    std::vector<int> decay_js{0, 1, 2, 3, 4, 5};
    double sharp_p = 2;
    std::vector<int> sharp_l1{1, 2, 3, 4, 5};
    std::vector<int> sharp_l2{1, 2, 3, 4, 5};
    std::string out = "out";
};

/// Validates every key; throws ConfigError anchored at the offending line.
RunSettings resolve(const Config& cfg);

/// Runs the listed probes; reports come back sorted by name.
std::vector<ProbeReport> run_probes(const RunSettings& s);
ProbeReport run_probe(const std::string& name, const RunSettings& s);

std::string code_version();
nlohmann::json report_json(const ProbeReport& r, const Config& cfg, std::optional<double> seconds);

struct Options {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int jobs = 1;
    bool timing = false;
    /// run only: compare outputs byte-for-byte with this directory (mismatch exits 1), or rewrite it.
    std::optional<std::string> golden;
    bool update_golden = false;
};

/// The three commands; diagnostics go to err. Exit codes: 0 pass, 1 probe failure, 2 invalid config.
int cmd_run(const std::string& config_path, const Options& opt, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values, const Options& opt,
              std::ostream& out, std::ostream& err);
int cmd_corpus(const std::string& spec_path, const Options& opt, std::ostream& out, std::ostream& err);

}  // namespace sparselab::lab
