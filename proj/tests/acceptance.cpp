// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <fockfb/fockfb.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

using namespace fockfb;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << name << "  " << detail << std::endl;
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) { return format_real(x); }

ExperimentConfig ideal() { return parse_config(Json::object()).experiment; }

constexpr std::uint64_t kSeed = 12345;
constexpr std::size_t kTraj = 1000;

}  // namespace

int main() {
    // Ideal loop, single worker; reused for the worker-count comparison.
    const Experiment ideal_ex = prepare(ideal());
    auto t0 = std::chrono::steady_clock::now();
    const EnsembleStats ideal_stats = run_ensemble(ideal_ex, kTraj, kSeed, 1);
    const double ideal_time = seconds_since(t0);
    {
        const double f40 = ideal_stats.fidelity_at(40);
        const double f100 = ideal_stats.fidelity_at(100);
        report("ideal_loop_fidelity", f40 >= 0.88 && f100 >= 0.95,
               "f(40)=" + fmt(f40) + " (>= 0.88)  f(100)=" + fmt(f100) + " (>= 0.95)");
        report("ideal_loop_runtime", ideal_time <= 60.0, fmt(ideal_time) + " s single-threaded (<= 60 s)");
    }

    {
        auto cfg = ideal();
        cfg.eta_f = 0.1;
        const auto stats = run_ensemble(cfg, kTraj, kSeed, default_workers());
        const double f30 = stats.fidelity_at(30);
        const double f100 = stats.fidelity_at(100);
        report("false_detection_fidelity", f30 >= 0.60 && f30 <= 0.80 && f100 >= 0.60 && f100 <= 0.82,
               "f(30)=" + fmt(f30) + " in [0.60, 0.80]  f(100)=" + fmt(f100) + " in [0.60, 0.82]");
    }

    {
        auto cfg = ideal();
        cfg.filter_init = FilterInit::uniform;
        const auto stats = run_ensemble(cfg, kTraj, kSeed, default_workers());
        const double f100 = stats.fidelity_at(100);
        report("uniform_filter_init_fidelity", f100 >= 0.9, "f(100)=" + fmt(f100) + " (>= 0.9)");
    }

    {
        t0 = std::chrono::steady_clock::now();
        const auto cfg = ideal();
        const auto reports = run_all_checks(cfg, 1000, 7);
        bool ok = all_passed(reports);
        std::string detail;
        for (const auto& r : reports) detail += r.name + "=" + fmt(r.max_violation) + (r.passed ? " " : "(!) ");
        const FockOperators ops(15);
        for (std::size_t n_bar = 0; n_bar <= 5; ++n_bar) {
            const auto r = check_rank_controllability(ops, n_bar);
            ok = ok && r.passed;
            detail += "rank_n" + std::to_string(n_bar) + "=" + fmt(krylov_rank(ops, n_bar).conditioning()) + " ";
        }
        const auto again = run_all_checks(cfg, 1000, 7);
        for (std::size_t i = 0; i < reports.size(); ++i) ok = ok && again[i].max_violation == reports[i].max_violation;
        const double elapsed = seconds_since(t0);
        ok = ok && elapsed <= 30.0;
        report("exact_inequality_suite", ok, detail + " time=" + fmt(elapsed) + " s (<= 30 s)");
    }

    {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / ("fockfb_accept_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        auto run = [&](const fs::path& out) {
            const std::string cmd = std::string("\"") + FOCKFB_CLI + "\" simulate --seed 42 --out \"" + out.string() + "\"";
            const int status = std::system(cmd.c_str());
            return WIFEXITED(status) && WEXITSTATUS(status) == 0;
        };
        bool ok = run(dir / "a.csv") && run(dir / "b.csv");
        std::string a, b;
        if (ok) {
            a = read_file((dir / "a.csv").string());
            b = read_file((dir / "b.csv").string());
            ok = !a.empty() && a == b;
        }
        report("simulate_byte_identical", ok, "simulate --seed 42 twice, " + std::to_string(a.size()) + " bytes");
        fs::remove_all(dir);
    }

    {
        double worst = 0.0;
        for (unsigned w : {4u, 8u}) {
            const auto stats = run_ensemble(ideal_ex, kTraj, kSeed, w);
            for (std::size_t k = 0; k < stats.steps; ++k) {
                worst = std::max(worst, std::abs(stats.mean_fidelity[k] - ideal_stats.mean_fidelity[k]));
            }
        }
        report("ensemble_worker_invariance", worst <= 1e-12, "max |mean difference| over workers {1,4,8} = " + fmt(worst));
    }

    {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng rng(seed);
            LoopState st = initial_loop_state(ideal_ex);
            for (int k = 0; k < 100; ++k) {
                st = step(st, ideal_ex, rng).first;
                worst = std::max(worst, (st.rho.matrix() - st.filter.rho_est.matrix()).cwiseAbs().maxCoeff());
            }
        }
        report("matched_filter_identity", worst <= 1e-9, "max ||rho - rho_est||_max over 50 seeds = " + fmt(worst));
    }

    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
