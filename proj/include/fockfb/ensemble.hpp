// ensemble.hpp: Parallel Monte-Carlo ensembles with schedule-independent results

#pragma once

#include "trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace fockfb {

// Seed of trajectory i: splitmix64 finalizer applied to master + (i+1)*golden.
//
//   z  = master + (i + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
//   z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^ (z >> 31)
inline constexpr std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    std::uint64_t z = master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// --------------------------- Per-step moment accumulators --------------------

// count/mean/M2 per step (Welford); partials over disjoint sample sets merge
// with Chan's pairwise update.
struct MomentSeries {
    std::uint64_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;

    void add(const std::vector<double>& sample) {
        if (count == 0) {
            mean.assign(sample.size(), 0.0);
            m2.assign(sample.size(), 0.0);
        } else if (sample.size() != mean.size()) {
            throw std::invalid_argument("MomentSeries::add: series length mismatch");
        }
        ++count;
        const double n = static_cast<double>(count);
        for (std::size_t k = 0; k < sample.size(); ++k) {
            const double delta = sample[k] - mean[k];
            mean[k] += delta / n;
            m2[k] += delta * (sample[k] - mean[k]);
        }
    }

    // Sample standard deviation; zero for fewer than two samples.
    [[nodiscard]] std::vector<double> stddev() const {
        std::vector<double> out(mean.size(), 0.0);
        if (count < 2) return out;
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = std::sqrt(std::max(0.0, m2[k] / static_cast<double>(count - 1)));
        }
        return out;
    }
};

inline MomentSeries welford_merge(const MomentSeries& a, const MomentSeries& b) {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    if (a.mean.size() != b.mean.size()) throw std::invalid_argument("welford_merge: series length mismatch");
    MomentSeries out;
    out.count = a.count + b.count;
    out.mean.resize(a.mean.size());
    out.m2.resize(a.mean.size());
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = static_cast<double>(out.count);
    for (std::size_t k = 0; k < out.mean.size(); ++k) {
        const double delta = b.mean[k] - a.mean[k];
        out.mean[k] = (na * a.mean[k] + nb * b.mean[k]) / n;
        out.m2[k] = a.m2[k] + b.m2[k] + delta * delta * na * nb / n;
    }
    return out;
}

// Linear-interpolation quantile of sorted data (R type 7).
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// --------------------------- Ensemble statistics -----------------------------

// Index k of every series refers to step k + 1.
struct EnsembleStats {
    std::size_t steps = 0;
    std::size_t n_traj = 0;
    std::vector<double> mean_fidelity;
    std::vector<double> std_fidelity;
    std::vector<double> q05;
    std::vector<double> q50;
    std::vector<double> q95;
    std::vector<double> mean_overlap_filter;

    // Mean true-state fidelity after `step` iterations (1-based).
    [[nodiscard]] double fidelity_at(std::size_t step) const {
        if (step == 0 || step > steps) throw std::out_of_range("EnsembleStats::fidelity_at: step out of range");
        return mean_fidelity[step - 1];
    }
};

// Per-trajectory series, indexed [trajectory][step - 1].
struct EnsembleSamples {
    std::vector<std::vector<double>> fidelity;
    std::vector<std::vector<double>> overlap;
};

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs trajectories 0..n_traj-1 with seeds trajectory_seed(master_seed, i) on
// `workers` threads. Output slots are owned by trajectory index, so the result
// does not depend on scheduling.
inline EnsembleSamples run_ensemble_samples(const Experiment& ex, std::size_t n_traj, std::uint64_t master_seed,
                                            unsigned workers = default_workers()) {
    if (n_traj == 0) throw std::invalid_argument("run_ensemble: n_traj must be >= 1");
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_traj)));
    EnsembleSamples out;
    out.fidelity.resize(n_traj);
    out.overlap.resize(n_traj);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n_traj; i = next++) {
            try {
                const auto records = run_trajectory(ex, trajectory_seed(master_seed, i));
                auto& f = out.fidelity[i];
                auto& o = out.overlap[i];
                f.reserve(records.size());
                o.reserve(records.size());
                for (const auto& r : records) {
                    f.push_back(r.fidelity_true);
                    o.push_back(r.overlap);
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

// Reduction in trajectory index order.
inline EnsembleStats summarize(const EnsembleSamples& samples, std::size_t steps) {
    EnsembleStats stats;
    stats.steps = steps;
    stats.n_traj = samples.fidelity.size();
    MomentSeries fid;
    MomentSeries ovl;
    for (std::size_t i = 0; i < stats.n_traj; ++i) {
        fid.add(samples.fidelity[i]);
        ovl.add(samples.overlap[i]);
    }
    stats.mean_fidelity = fid.count ? fid.mean : std::vector<double>(steps, 0.0);
    stats.std_fidelity = fid.count ? fid.stddev() : std::vector<double>(steps, 0.0);
    stats.mean_overlap_filter = ovl.count ? ovl.mean : std::vector<double>(steps, 0.0);
    stats.q05.resize(steps);
    stats.q50.resize(steps);
    stats.q95.resize(steps);
    std::vector<double> column(stats.n_traj);
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < stats.n_traj; ++i) column[i] = samples.fidelity[i][k];
        std::sort(column.begin(), column.end());
        stats.q05[k] = sorted_quantile(column, 0.05);
        stats.q50[k] = sorted_quantile(column, 0.50);
        stats.q95[k] = sorted_quantile(column, 0.95);
    }
    return stats;
}

inline EnsembleStats run_ensemble(const Experiment& ex, std::size_t n_traj, std::uint64_t master_seed,
                                  unsigned workers = default_workers()) {
    return summarize(run_ensemble_samples(ex, n_traj, master_seed, workers), ex.cfg.steps);
}

inline EnsembleStats run_ensemble(const ExperimentConfig& cfg, std::size_t n_traj, std::uint64_t master_seed,
                                  unsigned workers = default_workers()) {
    return run_ensemble(prepare(cfg), n_traj, master_seed, workers);
}

}  // namespace fockfb
