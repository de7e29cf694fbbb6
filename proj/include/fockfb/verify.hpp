// verify.hpp: Numerical certificates for the closed-loop inequalities
//
// Every check enumerates measurement outcomes exactly, so the reported
// violation carries rounding error only, never sampling error.

#pragma once

#include "feedback.hpp"
#include "filter.hpp"
#include "fock_algebra.hpp"
#include "measurement.hpp"
#include "trajectory.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fockfb {

struct CheckReport {
    std::string name;
    std::size_t trials = 0;
    double max_violation = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string detail;

    static CheckReport make(std::string name, std::size_t trials, double max_violation, double threshold,
                            std::string detail = {}) {
        return {std::move(name), trials, max_violation, threshold, max_violation <= threshold, std::move(detail)};
    }
};

// --------------------------- Random states -----------------------------------

// Box-Muller on uniform01 draws; avoids the implementation-defined
// std::normal_distribution so generated states match across platforms.
inline double standard_normal(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// G G^T / tr(G G^T), G a dim x rank matrix of independent standard normals.
// rank = nullopt means full rank.
inline DensityMatrix random_density(Rng& rng, std::size_t n_max, std::optional<std::size_t> rank = std::nullopt) {
    const std::size_t dim = n_max + 1;
    const std::size_t r = rank.value_or(dim);
    if (r < 1 || r > dim) throw std::invalid_argument("random_density: rank must lie in [1, n_max + 1]");
    Matrix g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(r));
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = standard_normal(rng);
    }
    return symmetrize_normalize(g * g.transpose());
}

// Rank drawn uniformly from [1, n_max + 1].
inline DensityMatrix random_density_any_rank(Rng& rng, std::size_t n_max) {
    const auto r = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_max + 1));
    return random_density(rng, n_max, std::min(r, n_max + 1));
}

// --------------------------- Checks ------------------------------------------

inline constexpr double kPovmThreshold = 1e-14;
inline constexpr double kMartingaleThreshold = 1e-10;
inline constexpr double kLyapunovThreshold = 1e-8;
inline constexpr double kContractionThreshold = 1e-10;
inline constexpr double kRankThreshold = 1e-10;
inline constexpr double kSmallGain = 1e-3;

inline CheckReport check_povm(const MeasurementModel& model, double threshold = kPovmThreshold) {
    const double v = (model.m_g.array().square() + model.m_e.array().square() - 1.0).abs().maxCoeff();
    return CheckReport::make("povm_completeness", 1, v, threshold);
}

// |p_g f(rho_g) + p_e f(rho_e) - f(rho)| for one state.
inline double martingale_defect(const DensityMatrix& rho, const MeasurementModel& model, std::size_t n_bar) {
    double expected = 0.0;
    for (Outcome s : {Outcome::g, Outcome::e}) {
        const double p = outcome_probability(rho, s, model);
        if (p < kProbabilityFloor) continue;
        expected += p * fidelity(project(rho, s, model), n_bar);
    }
    return std::abs(expected - fidelity(rho, n_bar));
}

inline CheckReport check_martingale(const MeasurementModel& model, std::size_t n_bar, std::size_t trials, Rng& rng,
                                    double threshold = kMartingaleThreshold) {
    double worst = martingale_defect(DensityMatrix::fock(model.n_max + 1, n_bar), model, n_bar);
    for (std::size_t t = 0; t < trials; ++t) {
        worst = std::max(worst, martingale_defect(random_density(rng, model.n_max), model, n_bar));
    }
    return CheckReport::make("martingale_identity", trials, worst, threshold);
}

// max(0, (c1/2) drift^2 - [f(D rho D^T) - f(rho)]) with alpha = c1 * drift.
inline double lyapunov_increase_defect(const DensityMatrix& rho, const FockOperators& ops, std::size_t n_bar,
                                       double c1) {
    const double drift = drift_term(rho, ops, n_bar);
    const double alpha = c1 * drift;
    const double gain = fidelity(apply_displacement(rho, ops.displacement(alpha)), n_bar) - fidelity(rho, n_bar);
    return std::max(0.0, 0.5 * c1 * drift * drift - gain);
}

// Random states are drawn with random rank and kept only if their fidelity
// exceeds cfg.epsilon. Displaced targets D(s)|n_bar> for s in {+-0.05, +-0.1}
// are always included.
inline CheckReport check_lyapunov_increase(const FockOperators& ops, const FeedbackConfig& cfg, std::size_t trials,
                                           Rng& rng, double c1 = kSmallGain, double threshold = kLyapunovThreshold) {
    const std::size_t n_bar = cfg.n_bar;
    double worst = 0.0;
    const DensityMatrix target = DensityMatrix::fock(ops.dim(), n_bar);
    for (double s : {-0.1, -0.05, 0.05, 0.1}) {
        worst = std::max(worst, lyapunov_increase_defect(apply_displacement(target, ops.displacement(s)), ops, n_bar, c1));
    }
    std::size_t accepted = 0;
    std::size_t drawn = 0;
    const std::size_t max_draws = 1000 * std::max<std::size_t>(trials, 1);
    while (accepted < trials && drawn < max_draws) {
        ++drawn;
        const DensityMatrix rho = random_density_any_rank(rng, ops.n_max());
        if (fidelity(rho, n_bar) <= cfg.epsilon) continue;
        ++accepted;
        worst = std::max(worst, lyapunov_increase_defect(rho, ops, n_bar, c1));
    }
    std::ostringstream detail;
    detail << "c1=" << c1 << " accepted " << accepted << " of " << drawn << " draws";
    auto report = CheckReport::make("lyapunov_increase", accepted, worst, threshold, detail.str());
    if (accepted < trials) report.passed = false;
    return report;
}

// max(0, tr(rho rho_est) - E[tr(rho' rho_est')]) for a constant control alpha.
inline double contraction_defect(const DensityMatrix& rho, const DensityMatrix& rho_est, double alpha,
                                 const MeasurementModel& model, const FockOperators& ops, std::size_t n_bar) {
    const auto e = conditional_step_expectation(rho, rho_est, [alpha](const DensityMatrix&) { return alpha; }, model,
                                                ops, n_bar);
    return std::max(0.0, overlap(rho, rho_est) - e.e_overlap);
}

// Pairs: rho of random rank, rho_est full rank.
inline CheckReport check_contraction(const MeasurementModel& model, const FockOperators& ops, std::size_t n_bar,
                                     std::size_t trials, Rng& rng, const std::vector<double>& alphas,
                                     double threshold = kContractionThreshold) {
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const DensityMatrix rho = random_density_any_rank(rng, model.n_max);
        const DensityMatrix est = random_density(rng, model.n_max);
        for (double alpha : alphas) {
            worst = std::max(worst, contraction_defect(rho, est, alpha, model, ops, n_bar));
        }
    }
    return CheckReport::make("filter_contraction", trials * alphas.size(), worst, threshold);
}

struct KrylovRank {
    double min_residual_ratio = 0.0;  // smallest ||new direction|| / ||q v_{j-1}|| over j
    double singular_ratio = 0.0;      // sigma_min / sigma_max of the orthonormalized columns
    [[nodiscard]] double conditioning() const { return std::min(min_residual_ratio, singular_ratio); }
};

// Orthonormal basis of span{q^j |n_bar>, j = 0..n_max} built incrementally
// (Arnoldi with two Gram-Schmidt passes). Raw powers grow like sqrt(n_max)^j
// and lose rank to rounding; the residual ratios measure how much genuinely
// new direction each power contributes.
inline KrylovRank krylov_rank(const FockOperators& ops, std::size_t n_bar) {
    if (n_bar > ops.n_max()) throw std::out_of_range("krylov_rank: n_bar exceeds n_max");
    const auto d = static_cast<Eigen::Index>(ops.dim());
    Matrix basis = Matrix::Zero(d, d);
    basis(static_cast<Eigen::Index>(n_bar), 0) = 1.0;
    KrylovRank out;
    out.min_residual_ratio = 1.0;
    for (Eigen::Index j = 1; j < d; ++j) {
        Vector w = ops.q() * basis.col(j - 1);
        const double before = w.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
        }
        const double after = w.norm();
        const double ratio = before > 0.0 ? after / before : 0.0;
        out.min_residual_ratio = std::min(out.min_residual_ratio, ratio);
        if (after == 0.0) break;
        basis.col(j) = w / after;
    }
    Eigen::JacobiSVD<Matrix> svd(basis);
    const auto& sv = svd.singularValues();
    out.singular_ratio = sv(sv.size() - 1) / sv(0);
    return out;
}

// Passes iff the family (q^j |n_bar>)_{j<=n_max} is numerically full rank.
// max_violation = threshold - conditioning, compared against 0.
inline CheckReport check_rank_controllability(const FockOperators& ops, std::size_t n_bar,
                                              double threshold = kRankThreshold) {
    const KrylovRank k = krylov_rank(ops, n_bar);
    std::ostringstream detail;
    detail << "n_bar=" << n_bar << " conditioning=" << k.conditioning() << " (> " << threshold << " required)";
    auto report = CheckReport::make("rank_controllability_n" + std::to_string(n_bar), 1, threshold - k.conditioning(),
                                    0.0, detail.str());
    report.passed = k.conditioning() > threshold;
    return report;
}

inline CheckReport check_phases(const MeasurementModel& model, double margin = kPhaseMargin) {
    const PhaseReport r = validate_phases(model, margin);
    const double count = static_cast<double>(r.degenerate_phases.size() + r.coincident_pairs.size());
    return CheckReport::make("phase_conditions", 1, count, 0.0, r.describe());
}

// All checks on cfg's model and target. Check i draws from its own stream
// seeded with trajectory_seed(seed, i).
inline std::vector<CheckReport> run_all_checks(const ExperimentConfig& cfg, std::size_t trials, std::uint64_t seed) {
    cfg.validate_structure();
    const FockOperators ops(cfg.n_max);
    const MeasurementModel model = cfg.measurement();
    const std::size_t n_bar = cfg.n_bar();
    auto stream = [seed](std::uint64_t i) { return Rng(trajectory_seed(seed, i)); };

    std::vector<CheckReport> reports;
    reports.push_back(check_phases(model));
    reports.push_back(check_povm(model));
    {
        Rng rng = stream(1);
        reports.push_back(check_martingale(model, n_bar, trials, rng));
    }
    {
        Rng rng = stream(2);
        reports.push_back(check_lyapunov_increase(ops, cfg.feedback, trials, rng));
    }
    {
        Rng rng = stream(3);
        reports.push_back(check_contraction(model, ops, n_bar, trials, rng, {0.0, 0.1, -0.1}));
    }
    reports.push_back(check_rank_controllability(ops, n_bar));
    return reports;
}

inline bool all_passed(const std::vector<CheckReport>& reports) {
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.passed; });
}

}  // namespace fockfb
