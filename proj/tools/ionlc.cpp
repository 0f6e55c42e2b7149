// ionlc: command-line front end for the ion/LC coupling simulations.
//
//   ionlc params   --config c.json --out dir
//   ionlc simulate --config c.json --out dir
//   ionlc protocol --config c.json --out dir
//   ionlc sweep    --config c.json --out dir --workers 4
//   ionlc check    [--expensive] [--workers n]

#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "ionlc/checks.hpp"
#include "ionlc/run.hpp"

namespace {

int run_mode(const std::string& mode, const std::string& config_path, const std::string& out_dir,
             std::size_t workers) {
    using namespace ionlc;
    RunConfig c;
    try {
        c = load_config(config_path);
        if (c.mode != mode)
            throw ConfigError("config mode '" + c.mode + "' does not match subcommand '" + mode + "'");
        if (workers > 0) c.workers = workers;
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (c.out_dir.empty()) c.out_dir = "out";
        validate(c);
    } catch (const ConfigError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    }
    const int code = run_and_emit(c, c.out_dir, std::cerr);
    if (code == kExitOk) std::cout << "wrote " << c.out_dir << "/summary.json\n";
    return code;
}

int run_check(bool expensive, std::size_t workers) {
    ionlc::CheckOptions opt;
    opt.expensive = expensive;
    opt.workers = workers > 0 ? workers : ionlc::default_workers();
    const auto results = ionlc::run_invariant_checks(opt);
    std::size_t failed = 0;
    for (const auto& r : results) {
        failed += r.passed ? 0 : 1;
        std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(13) << r.module << r.name
                  << "  value=" << std::setprecision(6) << r.value << " limit=" << r.limit;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << '\n';
    }
    std::cout << results.size() - failed << "/" << results.size() << " invariants hold\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ion motion / LC circuit parametric coupling simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::size_t workers = 0;
    bool expensive = false;

    for (const char* name : {"params", "simulate", "protocol", "sweep"}) {
        auto* sub = app.add_subcommand(name, std::string("run a '") + name + "' config");
        sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    }
    auto* check = app.add_subcommand("check", "run the invariant suite");
    check->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    check->add_flag("--expensive", expensive, "add the omega_i/omega_lc = 1e-3 RWA spot check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ionlc::kExitValidation;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    if (mode == "check") return run_check(expensive, workers);
    return run_mode(mode, config_path, out_dir, workers);
}
