// trajectory.hpp: Closed-loop Markov chain: true jump, noisy report, filter, feedback

#pragma once

#include "feedback.hpp"
#include "filter.hpp"
#include "fock_algebra.hpp"
#include "measurement.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fockfb {

// Configuration problem attributable to a single key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key_name, const std::string& what)
        : std::invalid_argument(key_name + ": " + what), key(std::move(key_name)) {}
    std::string key;
};

enum class InitialState { coherent, fock, custom };

inline std::string_view to_string(InitialState s) noexcept {
    switch (s) {
        case InitialState::coherent: return "coherent";
        case InitialState::fock: return "fock";
        case InitialState::custom: return "custom";
    }
    return "?";
}

struct ExperimentConfig {
    std::size_t n_max = 15;
    double phi = 0.3;
    std::optional<double> phi_r;  // unset: mid-fringe for feedback.n_bar
    FeedbackConfig feedback;      // feedback.n_bar is the target photon number
    double eta_f = 0.0;
    std::size_t steps = 100;
    FilterInit filter_init = FilterInit::matched;
    InitialState initial_state = InitialState::coherent;
    std::size_t initial_fock = 0;                  // used when initial_state == fock
    std::optional<DensityMatrix> custom_initial;   // used when initial_state == custom
    std::optional<DensityMatrix> custom_filter;    // used when filter_init == custom
    bool feedback_enabled = true;                  // false: open loop, alpha = 0 every step

    [[nodiscard]] std::size_t n_bar() const noexcept { return feedback.n_bar; }
    [[nodiscard]] double resolved_phi_r() const { return phi_r ? *phi_r : mid_fringe_phi_r(phi, feedback.n_bar); }
    [[nodiscard]] MeasurementModel measurement() const { return make_measurement(phi, resolved_phi_r(), n_max); }

    // Structural checks only; phase non-degeneracy is checked by prepare().
    void validate_structure() const {
        if (n_max == 0) throw ConfigError("n_max", "must be >= 1");
        if (feedback.n_bar > n_max) throw ConfigError("n_bar", "must not exceed n_max");
        if (!std::isfinite(phi)) throw ConfigError("phi", "must be finite");
        if (phi_r && !std::isfinite(*phi_r)) throw ConfigError("phi_r", "must be finite");
        if (!(eta_f >= 0.0 && eta_f <= 1.0)) throw ConfigError("eta_f", "must lie in [0, 1]");
        if (!(feedback.c1 > 0.0) || !std::isfinite(feedback.c1)) throw ConfigError("c1", "must be > 0");
        if (!(feedback.epsilon > 0.0 && feedback.epsilon < 1.0)) throw ConfigError("epsilon", "must lie in (0, 1)");
        if (!(feedback.alpha_bar > 0.0) || !std::isfinite(feedback.alpha_bar)) {
            throw ConfigError("alpha_bar", "must be > 0");
        }
        if (feedback.grid_points < 3 || feedback.grid_points % 2 == 0) {
            throw ConfigError("grid_points", "must be odd and >= 3");
        }
        if (initial_state == InitialState::fock && initial_fock > n_max) {
            throw ConfigError("initial_fock", "must not exceed n_max");
        }
        if (initial_state == InitialState::custom) {
            if (!custom_initial) throw ConfigError("initial_rho", "required when initial_state is custom");
            if (custom_initial->dim() != n_max + 1) throw ConfigError("initial_rho", "dimension must be n_max + 1");
            if (auto why = custom_initial->violation()) throw ConfigError("initial_rho", *why);
        }
        if (filter_init == FilterInit::custom) {
            if (!custom_filter) throw ConfigError("filter_rho", "required when filter_init is custom");
            if (custom_filter->dim() != n_max + 1) throw ConfigError("filter_rho", "dimension must be n_max + 1");
            if (auto why = custom_filter->violation()) throw ConfigError("filter_rho", *why);
        }
    }
};

// Immutable tables shared by every trajectory of one configuration.
struct Experiment {
    ExperimentConfig cfg;
    FockOperators ops;
    MeasurementModel model;
    DensityMatrix initial_rho;
    FilterState initial_filter;
};

inline DensityMatrix initial_system_state(const ExperimentConfig& cfg, const FockOperators& ops) {
    switch (cfg.initial_state) {
        case InitialState::coherent: return coherent_state(ops, cfg.n_bar());
        case InitialState::fock: return DensityMatrix::fock(cfg.n_max + 1, cfg.initial_fock);
        case InitialState::custom: return *cfg.custom_initial;
    }
    throw ConfigError("initial_state", "unknown kind");
}

// Validates cfg, including the phase conditions, and builds the shared tables.
inline Experiment prepare(const ExperimentConfig& cfg) {
    cfg.validate_structure();
    FockOperators ops(cfg.n_max);
    MeasurementModel model = cfg.measurement();
    const PhaseReport phases = validate_phases(model);
    if (!phases.valid()) {
        throw ConfigError(cfg.phi_r ? "phi_r" : "phi", phases.describe());
    }
    DensityMatrix rho0 = initial_system_state(cfg, ops);
    FilterState est0 = filter_init(cfg.filter_init, rho0, cfg.n_max, cfg.custom_filter);
    return {cfg, std::move(ops), std::move(model), std::move(rho0), std::move(est0)};
}

// --------------------------- Random draws ------------------------------------

// 64-bit Mersenne Twister; uniforms take the top 53 bits, so streams are
// reproducible across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// --------------------------- One step of the loop ----------------------------

struct LoopState {
    DensityMatrix rho;
    FilterState filter;
    std::size_t step = 0;
};

struct TrajectoryRecord {
    std::size_t step = 0;  // 1-based; quantities are those of rho_step
    Outcome true_outcome = Outcome::g;
    Outcome reported_outcome = Outcome::g;
    double alpha = 0.0;
    double fidelity_true = 0.0;
    double fidelity_est = 0.0;
    double v_est = 0.0;         // V(rho_est) before this step's measurement: the switching input
    double overlap = 0.0;       // tr(rho rho_est) after the step
    bool filter_retry = false;  // reported outcome was impossible under the estimate
};

inline LoopState initial_loop_state(const Experiment& ex) { return {ex.initial_rho, ex.initial_filter, 0}; }

inline double overlap(const DensityMatrix& a, const DensityMatrix& b) {
    return a.matrix().cwiseProduct(b.matrix()).sum();
}

// Draw order per step: outcome uniform, then flip uniform. Both are always drawn.
inline std::pair<LoopState, TrajectoryRecord> step(const LoopState& state, const Experiment& ex, Rng& rng) {
    const std::size_t n_bar = ex.cfg.n_bar();
    TrajectoryRecord rec;
    rec.step = state.step + 1;

    const double u = uniform01(rng);
    rec.true_outcome = u < outcome_probability(state.rho, Outcome::g, ex.model) ? Outcome::g : Outcome::e;
    const DensityMatrix rho_half = project(state.rho, rec.true_outcome, ex.model);

    const double v = uniform01(rng);
    rec.reported_outcome = v < ex.cfg.eta_f ? flipped(rec.true_outcome) : rec.true_outcome;

    rec.v_est = lyapunov_v(state.filter.rho_est, n_bar);
    DensityMatrix est_half;
    try {
        est_half = filter_measure(state.filter, rec.reported_outcome, ex.model);
    } catch (const ZeroProbabilityOutcome&) {
        rec.filter_retry = true;
        est_half = filter_measure(state.filter, flipped(rec.reported_outcome), ex.model);
    }

    rec.alpha = ex.cfg.feedback_enabled ? feedback_switched(rec.v_est, est_half, ex.ops, ex.cfg.feedback) : 0.0;
    const Matrix d = ex.ops.displacement(rec.alpha);

    LoopState next{apply_displacement(rho_half, d), {apply_displacement(est_half, d), state.filter.init_kind},
                   state.step + 1};
    rec.fidelity_true = fidelity(next.rho, n_bar);
    rec.fidelity_est = fidelity(next.filter.rho_est, n_bar);
    rec.overlap = overlap(next.rho, next.filter.rho_est);
    return {std::move(next), rec};
}

// Runs cfg.steps steps from the prepared initial state.
inline std::vector<TrajectoryRecord> run_trajectory(const Experiment& ex, std::uint64_t seed,
                                                    LoopState* final_state = nullptr) {
    Rng rng(seed);
    LoopState state = initial_loop_state(ex);
    std::vector<TrajectoryRecord> records;
    records.reserve(ex.cfg.steps);
    for (std::size_t k = 0; k < ex.cfg.steps; ++k) {
        auto [next, rec] = step(state, ex, rng);
        state = std::move(next);
        records.push_back(rec);
    }
    if (final_state) *final_state = std::move(state);
    return records;
}

inline std::vector<TrajectoryRecord> run_trajectory(const ExperimentConfig& cfg, std::uint64_t seed) {
    return run_trajectory(prepare(cfg), seed);
}

// --------------------------- Exact one-step expectations ---------------------

struct StepExpectation {
    double e_v = 0.0;        // E[V(rho_{k+1}) | rho_k, rho_est_k]
    double e_overlap = 0.0;  // E[tr(rho_{k+1} rho_est_{k+1}) | rho_k, rho_est_k]
};

// Maps the filter's post-measurement state to the injected alpha.
using AlphaPolicy = std::function<double(const DensityMatrix& rho_est_half)>;

// Both outcomes enumerated, weighted by the TRUE state's probabilities, with an
// ideal (unflipped) report. Outcomes with true probability below the floor
// contribute nothing.
inline StepExpectation conditional_step_expectation(const DensityMatrix& rho, const DensityMatrix& rho_est,
                                                    const AlphaPolicy& policy, const MeasurementModel& model,
                                                    const FockOperators& ops, std::size_t n_bar) {
    StepExpectation out;
    for (Outcome s : {Outcome::g, Outcome::e}) {
        const double p = outcome_probability(rho, s, model);
        if (p < kProbabilityFloor) continue;
        const DensityMatrix half = project(rho, s, model);
        const DensityMatrix est_half = project(rho_est, s, model);
        const Matrix d = ops.displacement(policy(est_half));
        const DensityMatrix next = apply_displacement(half, d);
        const DensityMatrix est_next = apply_displacement(est_half, d);
        out.e_v += p * lyapunov_v(next, n_bar);
        out.e_overlap += p * overlap(next, est_next);
    }
    return out;
}

}  // namespace fockfb
