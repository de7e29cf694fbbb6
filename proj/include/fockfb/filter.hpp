// filter.hpp: Discrete-time quantum filter driven by reported outcomes

#pragma once

#include "fock_algebra.hpp"
#include "measurement.hpp"

#include <optional>
#include <stdexcept>
#include <string_view>

namespace fockfb {

enum class FilterInit { matched, uniform, custom };

inline std::string_view to_string(FilterInit k) noexcept {
    switch (k) {
        case FilterInit::matched: return "matched";
        case FilterInit::uniform: return "uniform";
        case FilterInit::custom: return "custom";
    }
    return "?";
}

struct FilterState {
    DensityMatrix rho_est;
    FilterInit init_kind = FilterInit::matched;
};

// matched: copy of the system's initial state; uniform: I/(n_max+1), which is
// full rank; custom: the supplied matrix, validated.
inline FilterState filter_init(FilterInit kind, const DensityMatrix& rho_system_initial, std::size_t n_max,
                               const std::optional<DensityMatrix>& custom = std::nullopt) {
    switch (kind) {
        case FilterInit::matched:
            return {rho_system_initial, kind};
        case FilterInit::uniform:
            return {DensityMatrix::maximally_mixed(n_max + 1), kind};
        case FilterInit::custom: {
            if (!custom) throw std::invalid_argument("filter_init: custom initialization needs a state");
            if (custom->dim() != n_max + 1) throw std::invalid_argument("filter_init: custom state has wrong dimension");
            if (auto why = custom->violation()) throw std::invalid_argument("filter_init: custom state " + *why);
            return {*custom, kind};
        }
    }
    throw std::invalid_argument("filter_init: unknown kind");
}

struct FilterUpdate {
    FilterState next;         // rho_est_{k+1}
    DensityMatrix rho_half;   // rho_est_{k+1/2}: after measurement, before injection
};

// Measurement half-step only; the feedback law consumes its result.
inline DensityMatrix filter_measure(const FilterState& state, Outcome reported, const MeasurementModel& model) {
    return project(state.rho_est, reported, model);
}

// rho_est <- D(alpha) (M_s rho_est M_s / tr(.)) D(-alpha).
inline FilterUpdate filter_update(const FilterState& state, Outcome reported, double alpha,
                                  const MeasurementModel& model, const FockOperators& ops) {
    DensityMatrix half = filter_measure(state, reported, model);
    FilterState next{apply_displacement(half, ops.displacement(alpha)), state.init_kind};
    return {std::move(next), std::move(half)};
}

}  // namespace fockfb
