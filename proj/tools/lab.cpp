#include <iostream>

#include "CLI11.hpp"
#include "sparselab/cli.hpp"

int main(int argc, char** argv) {
    namespace lab = sparselab::lab;
    CLI::App app{"Numerical probes for sparse domination of pseudodifferential operators"};
    app.require_subcommand(1);
    lab::Options opt;
    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--seed", seed, "Override corpus.seed");
    app.add_option("--out", out, "Output directory (default output.dir or ./out)");
    app.add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--timing", opt.timing, "Record wall-clock seconds in reports (breaks byte-identical output)");

    std::string config, axis, values;
    auto* run = app.add_subcommand("run", "Run the probes listed in a config");
    run->add_option("config", config, "Config file")->required();
    std::string golden;
    run->add_option("--golden", golden, "Compare outputs byte-for-byte with this directory");
    run->add_flag("--update-golden", opt.update_golden, "Rewrite the --golden directory from this run")->needs("--golden");
    auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one numeric key");
    sweep->add_option("config", config, "Config file")->required();
    sweep->add_option("--axis", axis, "Key to vary, e.g. symbol.m")->required();
    sweep->add_option("--values", values, "Comma separated values")->required()->expected(0, 1)->default_str("");
    auto* corpus = app.add_subcommand("corpus", "Dump the test corpus as binary grid functions");
    corpus->add_option("spec", config, "Config holding [grid] and [corpus]")->required();
    for (auto* sub : {run, sweep, corpus}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (app.count("--seed")) opt.seed = seed;
    if (app.count("--out")) opt.out = out;
    if (run->count("--golden")) opt.golden = golden;

    if (*run) return lab::cmd_run(config, opt, std::cout, std::cerr);
    if (*sweep) return lab::cmd_sweep(config, axis, values, opt, std::cout, std::cerr);
    return lab::cmd_corpus(config, opt, std::cout, std::cerr);
}
