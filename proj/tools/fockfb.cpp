// fockfb: command-line driver: simulate, ensemble, verify, params
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error, 3 I/O error.

#include <fockfb/fockfb.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trajectories;
    std::optional<std::string> out;
    std::optional<std::string> summary;
    std::optional<double> eta_f;
    std::optional<std::size_t> steps;
    std::optional<double> phi;
    std::size_t trials = 1000;
    unsigned workers = 0;
};

fockfb::RunConfig resolve(const Overrides& o) {
    fockfb::RunConfig run = o.config_path.empty() ? fockfb::parse_config(fockfb::Json::object())
                                                  : fockfb::load_config(o.config_path);
    auto& e = run.experiment;
    if (o.seed) run.seed = *o.seed;
    if (o.trajectories) run.n_traj = *o.trajectories;
    if (o.out) run.out = *o.out;
    if (o.summary) run.summary = *o.summary;
    if (o.eta_f) e.eta_f = *o.eta_f;
    if (o.steps) e.steps = *o.steps;
    if (o.phi) e.phi = *o.phi;
    e.validate_structure();
    return run;
}

void warn_truncation(const fockfb::ExperimentConfig& e) {
    if (e.initial_state != fockfb::InitialState::coherent) return;
    const double tail = fockfb::poisson_tail_mass(static_cast<double>(e.n_bar()), e.n_max);
    if (tail > fockfb::kCoherentTailWarning) {
        std::cerr << "warning: coherent initial state loses Poisson mass " << tail << " above n_max=" << e.n_max
                  << "\n";
    }
}

int cmd_simulate(const Overrides& o) {
    const auto run = resolve(o);
    if (!run.out) throw fockfb::ConfigError("out", "an output path is required (--out)");
    warn_truncation(run.experiment);
    const auto ex = fockfb::prepare(run.experiment);
    const auto records = fockfb::run_trajectory(ex, run.seed);
    fockfb::write_file(*run.out, fockfb::trajectory_csv(records));
    return kExitOk;
}

int cmd_ensemble(const Overrides& o) {
    const auto run = resolve(o);
    if (!run.out) throw fockfb::ConfigError("out", "an output path is required (--out)");
    if (run.n_traj == 0) throw fockfb::ConfigError("n_traj", "must be >= 1");
    warn_truncation(run.experiment);
    const auto ex = fockfb::prepare(run.experiment);
    const unsigned workers = o.workers == 0 ? fockfb::default_workers() : o.workers;
    const auto stats = fockfb::run_ensemble(ex, run.n_traj, run.seed, workers);
    fockfb::write_file(*run.out, fockfb::ensemble_csv(stats));
    if (run.summary) fockfb::write_file(*run.summary, fockfb::ensemble_summary(run, stats).dump(2) + "\n");
    return kExitOk;
}

int cmd_verify(const Overrides& o) {
    const auto run = resolve(o);
    const auto reports = fockfb::run_all_checks(run.experiment, o.trials, run.seed);
    for (const auto& r : reports) {
        std::cout << std::left << std::setw(28) << r.name << "  " << std::setw(6) << r.trials << "  "
                  << fockfb::format_real(r.max_violation) << "  " << fockfb::format_real(r.threshold) << "  "
                  << (r.passed ? "PASS" : "FAIL");
        if (!r.passed && !r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
    }
    return fockfb::all_passed(reports) ? kExitOk : kExitVerifyFailed;
}

int cmd_params(const Overrides& o) {
    std::cout << fockfb::config_to_json(resolve(o)).dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measurement-based feedback stabilization of cavity Fock states"};
    app.require_subcommand(1);
    Overrides o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON configuration file");
        sub->add_option("--seed", o.seed, "Seed (master seed for ensembles)");
        sub->add_option("--eta-f", o.eta_f, "Override the false detection probability");
        sub->add_option("--steps", o.steps, "Override the number of steps");
        sub->add_option("--phi", o.phi, "Override the dephasing per photon (rad)");
    };

    auto* simulate = app.add_subcommand("simulate", "Run one closed-loop trajectory and write it as CSV");
    add_common(simulate);
    simulate->add_option("--out", o.out, "Trajectory CSV path");

    auto* ensemble = app.add_subcommand("ensemble", "Run an ensemble and write per-step statistics");
    add_common(ensemble);
    ensemble->add_option("--trajectories", o.trajectories, "Number of trajectories");
    ensemble->add_option("--out", o.out, "Statistics CSV path");
    ensemble->add_option("--summary", o.summary, "JSON summary path");
    ensemble->add_option("--workers", o.workers, "Worker threads (0: hardware concurrency)");

    auto* verify = app.add_subcommand("verify", "Run the exact inequality checks");
    add_common(verify);
    verify->add_option("--trials", o.trials, "Random trials per check");

    auto* params = app.add_subcommand("params", "Print the resolved configuration");
    add_common(params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(o);
        if (*ensemble) return cmd_ensemble(o);
        if (*verify) return cmd_verify(o);
        if (*params) return cmd_params(o);
    } catch (const fockfb::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fockfb::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
