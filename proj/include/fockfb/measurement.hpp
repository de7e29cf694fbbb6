// measurement.hpp: QND measurement channel built from Ramsey phases

#pragma once

#include "fock_algebra.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fockfb {

enum class Outcome { g, e };

inline Outcome flipped(Outcome s) noexcept { return s == Outcome::g ? Outcome::e : Outcome::g; }

inline char to_char(Outcome s) noexcept { return s == Outcome::g ? 'g' : 'e'; }

inline constexpr double kProbabilityFloor = 1e-12;

// Thrown when a projection is requested for an outcome whose probability is
// below the floor.
class ZeroProbabilityOutcome : public std::runtime_error {
public:
    ZeroProbabilityOutcome(Outcome s, double p)
        : std::runtime_error(std::string("outcome ") + to_char(s) + " has probability " +
                             std::to_string(p) + " below the floor"),
          outcome(s), probability(p) {}
    Outcome outcome;
    double probability;
};

// M_g = cos(theta_N), M_e = sin(theta_N), theta_n = (phi_r + phi)/2 + n*phi.
// Both operators are diagonal; only their diagonals are stored.
struct MeasurementModel {
    double phi = 0.0;
    double phi_r = 0.0;
    std::size_t n_max = 0;
    Vector m_g;
    Vector m_e;

    [[nodiscard]] double phase(std::size_t n) const {
        return 0.5 * (phi_r + phi) + static_cast<double>(n) * phi;
    }
    [[nodiscard]] const Vector& diagonal(Outcome s) const { return s == Outcome::g ? m_g : m_e; }
    [[nodiscard]] Matrix operator_matrix(Outcome s) const { return diagonal(s).asDiagonal(); }
};

inline MeasurementModel make_measurement(double phi, double phi_r, std::size_t n_max) {
    if (n_max == 0) throw std::invalid_argument("make_measurement: n_max must be >= 1");
    MeasurementModel m{phi, phi_r, n_max, Vector(n_max + 1), Vector(n_max + 1)};
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double theta = m.phase(n);
        m.m_g(static_cast<Eigen::Index>(n)) = std::cos(theta);
        m.m_e(static_cast<Eigen::Index>(n)) = std::sin(theta);
    }
    return m;
}

// phi_r such that (phi_r + phi)/2 + n_bar*phi = pi/4, i.e. P_g = P_e = 1/2 on |n_bar>.
inline double mid_fringe_phi_r(double phi, std::size_t n_bar) {
    return std::numbers::pi / 2.0 - (2.0 * static_cast<double>(n_bar) + 1.0) * phi;
}

// --------------------------- Phase non-degeneracy ----------------------------

struct PhaseReport {
    // n with theta_n within margin of a multiple of pi/2 (some M_s has a zero entry).
    std::vector<std::size_t> degenerate_phases;
    // (m, n) with |cos^2 theta_m - cos^2 theta_n| <= margin (outcome statistics cannot
    // separate |m> from |n>).
    std::vector<std::pair<std::size_t, std::size_t>> coincident_pairs;
    double margin = 0.0;

    [[nodiscard]] bool valid() const { return degenerate_phases.empty() && coincident_pairs.empty(); }

    [[nodiscard]] std::string describe() const {
        if (valid()) return "phase conditions hold";
        std::string out = "photon-number phase conditions violated:";
        if (!degenerate_phases.empty()) {
            out += " (phi_r+phi)/2 + n*phi = 0 mod pi/2 for n =";
            for (auto n : degenerate_phases) out += " " + std::to_string(n);
            out += ";";
        }
        if (!coincident_pairs.empty()) {
            out += " cos^2 values not pairwise distinct (" + std::to_string(coincident_pairs.size()) +
                   " coincident pairs, first (" + std::to_string(coincident_pairs.front().first) + "," +
                   std::to_string(coincident_pairs.front().second) + "))";
        }
        return out;
    }
};

inline constexpr double kPhaseMargin = 1e-9;

inline PhaseReport validate_phases(const MeasurementModel& model, double margin = kPhaseMargin) {
    PhaseReport report;
    report.margin = margin;
    const double quarter = std::numbers::pi / 2.0;
    std::vector<double> cos2(model.n_max + 1);
    for (std::size_t n = 0; n <= model.n_max; ++n) {
        const double theta = model.phase(n);
        const double r = std::remainder(theta, quarter);  // in [-pi/4, pi/4]
        if (std::abs(r) <= margin) report.degenerate_phases.push_back(n);
        const double c = std::cos(theta);
        cos2[n] = c * c;
    }
    for (std::size_t m = 0; m <= model.n_max; ++m) {
        for (std::size_t n = m + 1; n <= model.n_max; ++n) {
            if (std::abs(cos2[m] - cos2[n]) <= margin) report.coincident_pairs.emplace_back(m, n);
        }
    }
    return report;
}

// --------------------------- Outcome statistics and back-action --------------

struct OutcomeProbabilities {
    double p_g = 0.0;
    double p_e = 0.0;
    [[nodiscard]] double of(Outcome s) const { return s == Outcome::g ? p_g : p_e; }
};

// tr(M_s rho M_s) = sum_n m_s[n]^2 rho[n,n].
inline double outcome_probability(const DensityMatrix& rho, Outcome s, const MeasurementModel& model) {
    const Vector& m = model.diagonal(s);
    return (m.array().square() * rho.matrix().diagonal().array()).sum();
}

inline OutcomeProbabilities outcome_probabilities(const DensityMatrix& rho, const MeasurementModel& model) {
    if (rho.dim() != model.n_max + 1) {
        throw std::invalid_argument("outcome_probabilities: dimension mismatch");
    }
    return {outcome_probability(rho, Outcome::g, model), outcome_probability(rho, Outcome::e, model)};
}

// M_s rho M_s / tr(M_s rho M_s). Diagonal M_s makes this an elementwise scaling.
inline DensityMatrix project(const DensityMatrix& rho, Outcome s, const MeasurementModel& model,
                             double floor = kProbabilityFloor) {
    if (rho.dim() != model.n_max + 1) {
        throw std::invalid_argument("project: dimension mismatch");
    }
    const Vector& m = model.diagonal(s);
    Matrix x = m.asDiagonal() * rho.matrix() * m.asDiagonal();
    const double p = x.trace();
    if (!(p >= floor)) throw ZeroProbabilityOutcome(s, p);
    return symmetrize_normalize(x);
}

}  // namespace fockfb
