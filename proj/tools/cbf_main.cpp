// cbf: batch driver for the 2D convective Brinkman-Forchheimer toolkit.
// One subcommand per experiment kind; everything else lives in the config.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cbf/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool dry_run = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_kind(const std::string& kind, const CommonArgs& args) {
    cbf::RunConfig cfg = cbf::parse_config(slurp(args.config_path));
    if (cfg.experiment.kind != kind)
        throw cbf::ConfigError("config declares experiment kind '" + cfg.experiment.kind +
                               "' but subcommand '" + kind + "' was invoked");
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (args.dry_run) {
        std::cout << "config ok: " << args.config_path << "\n";
        return 0;
    }
    const cbf::ExperimentResult res = cbf::run_experiment(cfg);
    for (const auto& r : res.reports) std::cout << r.human_line() << "\n";
    std::cout << (res.all_pass() ? "all bound reports pass" : "bound report failures present")
              << "; artifacts in " << cfg.out_dir << "\n";
    return res.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D convective Brinkman-Forchheimer pseudo-spectral toolkit"};
    app.require_subcommand(1);

    static const char* kinds[] = {"simulate",  "energy-audit",   "absorbing", "frechet",
                                  "lyapunov",  "semicontinuity", "verify"};

    CommonArgs args;
    for (const char* kind : kinds) {
        auto* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
        sub->add_option("--config", args.config_path, "config file path")->required();
        sub->add_option("--seed", args.seed, "override the run seed");
        sub->add_option("--out", args.out_dir, "override the output directory");
        sub->add_flag("--dry-run", args.dry_run, "validate the config and exit");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const char* kind : kinds)
            if (app.get_subcommand(kind)->parsed()) return run_kind(kind, args);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
