// feedback.hpp: Lyapunov feedback laws for Fock-state stabilization

#pragma once

#include "fock_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fockfb {

struct FeedbackConfig {
    std::size_t n_bar = 3;
    double c1 = 1.0 / 13.0;
    double epsilon = 0.1;
    double alpha_bar = 0.1;
    std::size_t grid_points = 201;

    void validate() const {
        if (!(c1 > 0.0) || !std::isfinite(c1)) throw std::invalid_argument("c1 must be > 0");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
        if (!(alpha_bar > 0.0) || !std::isfinite(alpha_bar)) {
            throw std::invalid_argument("alpha_bar must be > 0");
        }
        if (grid_points < 3 || grid_points % 2 == 0) {
            throw std::invalid_argument("grid_points must be odd and >= 3");
        }
    }
};

// V(rho) = 1 - tr(rho |n_bar><n_bar|).
inline double lyapunov_v(const DensityMatrix& rho, std::size_t n_bar) { return 1.0 - fidelity(rho, n_bar); }

// W(rho) = 1 - tr(rho |n_bar><n_bar|)^2.
inline double lyapunov_w(const DensityMatrix& rho, std::size_t n_bar) {
    const double f = fidelity(rho, n_bar);
    return 1.0 - f * f;
}

// tr([rho_bar, q] rho) with rho_bar = |n_bar><n_bar| and q = a^T - a.
//
// tr(rho_bar q rho) = (q rho)[n,n] and tr(q rho_bar rho) = (rho q)[n,n], so only
// row/column n_bar of the products are needed.
inline double drift_term(const DensityMatrix& rho, const FockOperators& ops, std::size_t n_bar) {
    if (n_bar > ops.n_max()) throw std::out_of_range("drift_term: n_bar exceeds n_max");
    const auto n = static_cast<Eigen::Index>(n_bar);
    const Matrix& q = ops.q();
    const Matrix& r = rho.matrix();
    return q.row(n).dot(r.col(n)) - r.row(n).dot(q.col(n));
}

// --------------------------- Gain rules --------------------------------------

// c1 = 1 / (4 n_bar + 1), the gain used by the reference closed-loop simulations.
inline double default_gain(std::size_t n_bar) { return 1.0 / (4.0 * static_cast<double>(n_bar) + 1.0); }

// tr(C C) with C = [rho_bar, q]. Equals 4 n_bar + 2 away from the truncation edge.
inline double commutator_trace(const FockOperators& ops, std::size_t n_bar) {
    if (n_bar > ops.n_max()) throw std::out_of_range("commutator_trace: n_bar exceeds n_max");
    const auto d = static_cast<Eigen::Index>(ops.dim());
    Matrix target = Matrix::Zero(d, d);
    target(static_cast<Eigen::Index>(n_bar), static_cast<Eigen::Index>(n_bar)) = 1.0;
    const Matrix c = target * ops.q() - ops.q() * target;
    return (c * c).trace();
}

// c1 = 1 / tr(C C): maximizes the second-order fidelity gain near the target.
inline double commutator_gain(const FockOperators& ops, std::size_t n_bar) {
    return 1.0 / commutator_trace(ops, n_bar);
}

// --------------------------- Control laws ------------------------------------

inline double feedback_linear(const DensityMatrix& rho_half, const FockOperators& ops, const FeedbackConfig& cfg) {
    return cfg.c1 * drift_term(rho_half, ops, cfg.n_bar);
}

// Values within this distance of the grid maximum count as ties.
inline constexpr double kArgmaxTieTolerance = 1e-13;

// alpha_i = alpha_bar * (2i - (G-1)) / (G-1): exact zero in the middle, exact +-alpha_bar at the ends.
inline double argmax_grid_point(const FeedbackConfig& cfg, std::size_t i) {
    const double g = static_cast<double>(cfg.grid_points - 1);
    return cfg.alpha_bar * (2.0 * static_cast<double>(i) - g) / g;
}

// tr(rho_bar D(alpha) rho D(-alpha)) = r rho r^T, r = row n_bar of D(alpha).
inline double displaced_fidelity(const DensityMatrix& rho, const FockOperators& ops, std::size_t n_bar,
                                 double alpha) {
    const Vector r = ops.displacement_row(alpha, n_bar);
    return r.dot(rho.matrix() * r);
}

// Grid search for argmax over [-alpha_bar, alpha_bar] of the displaced fidelity.
// Ties go to the smallest |alpha|, then to the negative value.
inline double feedback_argmax(const DensityMatrix& rho_half, const FockOperators& ops, const FeedbackConfig& cfg) {
    const std::size_t grid = cfg.grid_points;
    std::vector<double> value(grid);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid; ++i) {
        value[i] = displaced_fidelity(rho_half, ops, cfg.n_bar, argmax_grid_point(cfg, i));
        best = std::max(best, value[i]);
    }
    double chosen = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < grid; ++i) {
        if (value[i] < best - kArgmaxTieTolerance) continue;
        const double alpha = argmax_grid_point(cfg, i);
        if (std::isnan(chosen) || std::abs(alpha) < std::abs(chosen) ||
            (std::abs(alpha) == std::abs(chosen) && alpha < chosen)) {
            chosen = alpha;
        }
    }
    return chosen;
}

// Linear law while V(rho_k) <= 1 - epsilon, grid argmax otherwise. v_of_rho_k is V
// of the pre-measurement state; rho_half is the post-measurement state the
// control acts on.
inline double feedback_switched(double v_of_rho_k, const DensityMatrix& rho_half, const FockOperators& ops,
                                const FeedbackConfig& cfg) {
    if (v_of_rho_k <= 1.0 - cfg.epsilon) return feedback_linear(rho_half, ops, cfg);
    return feedback_argmax(rho_half, ops, cfg);
}

}  // namespace fockfb
