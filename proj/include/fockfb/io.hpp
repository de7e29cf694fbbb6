// io.hpp: JSON run configuration, CSV series and JSON summaries

#pragma once

#include "ensemble.hpp"
#include "feedback.hpp"
#include "trajectory.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace fockfb {

using Json = nlohmann::json;

// Failure to read or write a file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An experiment plus the run parameters the CLI needs.
struct RunConfig {
    ExperimentConfig experiment;
    std::size_t n_traj = 1000;
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    std::optional<std::string> summary;
};

// --------------------------- Number formatting -------------------------------

// 12 significant digits, shortest of fixed/scientific, '.' decimal point
// regardless of the global locale.
inline std::string format_real(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
    if (res.ec != std::errc{}) throw std::runtime_error("format_real: conversion failed");
    return {buf, res.ptr};
}

// --------------------------- Config parsing ----------------------------------

namespace detail {

inline double get_real(const Json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key, "expected a number");
    return j.get<double>();
}

inline std::size_t get_count(const Json& j, const std::string& key) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
        throw ConfigError(key, "expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

inline std::uint64_t get_u64(const Json& j, const std::string& key) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    throw ConfigError(key, "expected an unsigned 64-bit integer");
}

inline std::string get_string(const Json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError(key, "expected a string");
    return j.get<std::string>();
}

inline DensityMatrix get_matrix(const Json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) throw ConfigError(key, "expected a square array of arrays");
    const auto n = static_cast<Eigen::Index>(j.size());
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw ConfigError(key, "expected a square array of arrays");
        }
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = get_real(row[static_cast<std::size_t>(c)], key);
    }
    return DensityMatrix(std::move(m));
}

inline Json matrix_to_json(const DensityMatrix& rho) {
    Json out = Json::array();
    for (std::size_t r = 0; r < rho.dim(); ++r) {
        Json row = Json::array();
        for (std::size_t c = 0; c < rho.dim(); ++c) row.push_back(rho(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "n_max",      "n_bar",       "phi",          "phi_r",        "c1",          "gain_rule",
        "epsilon",    "alpha_bar",   "grid_points",  "eta_f",        "steps",       "filter_init",
        "initial_state", "initial_fock", "initial_rho", "filter_rho", "n_traj",     "seed",
        "out",        "summary",     "feedback_enabled"};
    return keys;
}

// Missing keys take the defaults of ExperimentConfig/RunConfig; an absent
// phi_r means mid-fringe and an absent c1 means the gain named by gain_rule
// ("simulation": 1/(4 n_bar + 1), "commutator": 1/tr([rho_bar,q]^2)).
inline RunConfig parse_config(const Json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!config_keys().count(key)) throw ConfigError(key, "unknown key");
    }
    RunConfig run;
    ExperimentConfig& e = run.experiment;
    auto has = [&](const char* k) { return doc.contains(k); };

    if (has("n_max")) e.n_max = get_count(doc["n_max"], "n_max");
    if (has("n_bar")) e.feedback.n_bar = get_count(doc["n_bar"], "n_bar");
    if (has("phi")) e.phi = get_real(doc["phi"], "phi");
    if (has("phi_r")) e.phi_r = get_real(doc["phi_r"], "phi_r");
    if (has("epsilon")) e.feedback.epsilon = get_real(doc["epsilon"], "epsilon");
    if (has("alpha_bar")) e.feedback.alpha_bar = get_real(doc["alpha_bar"], "alpha_bar");
    if (has("grid_points")) e.feedback.grid_points = get_count(doc["grid_points"], "grid_points");
    if (has("eta_f")) e.eta_f = get_real(doc["eta_f"], "eta_f");
    if (has("steps")) e.steps = get_count(doc["steps"], "steps");

    if (has("filter_init")) {
        const std::string kind = get_string(doc["filter_init"], "filter_init");
        if (kind == "matched") e.filter_init = FilterInit::matched;
        else if (kind == "uniform") e.filter_init = FilterInit::uniform;
        else if (kind == "custom") e.filter_init = FilterInit::custom;
        else throw ConfigError("filter_init", "expected matched, uniform or custom");
    }
    if (has("initial_state")) {
        const std::string kind = get_string(doc["initial_state"], "initial_state");
        if (kind == "coherent") e.initial_state = InitialState::coherent;
        else if (kind == "fock") e.initial_state = InitialState::fock;
        else if (kind == "custom") e.initial_state = InitialState::custom;
        else throw ConfigError("initial_state", "expected coherent, fock or custom");
    }
    if (has("initial_fock")) e.initial_fock = get_count(doc["initial_fock"], "initial_fock");
    if (has("initial_rho")) e.custom_initial = get_matrix(doc["initial_rho"], "initial_rho");
    if (has("filter_rho")) e.custom_filter = get_matrix(doc["filter_rho"], "filter_rho");
    if (has("feedback_enabled")) {
        if (!doc["feedback_enabled"].is_boolean()) throw ConfigError("feedback_enabled", "expected true or false");
        e.feedback_enabled = doc["feedback_enabled"].get<bool>();
    }

    const std::string rule = has("gain_rule") ? get_string(doc["gain_rule"], "gain_rule") : "simulation";
    if (rule != "simulation" && rule != "commutator") {
        throw ConfigError("gain_rule", "expected simulation or commutator");
    }
    if (has("c1")) {
        if (has("gain_rule")) throw ConfigError("gain_rule", "cannot be combined with an explicit c1");
        e.feedback.c1 = get_real(doc["c1"], "c1");
    } else if (rule == "simulation") {
        e.feedback.c1 = default_gain(e.feedback.n_bar);
    } else {
        if (e.n_max == 0 || e.feedback.n_bar > e.n_max) throw ConfigError("n_bar", "must not exceed n_max");
        e.feedback.c1 = commutator_gain(FockOperators(e.n_max), e.feedback.n_bar);
    }

    if (has("n_traj")) run.n_traj = get_count(doc["n_traj"], "n_traj");
    if (has("seed")) run.seed = get_u64(doc["seed"], "seed");
    if (has("out")) run.out = get_string(doc["out"], "out");
    if (has("summary")) run.summary = get_string(doc["summary"], "summary");

    e.validate_structure();
    return run;
}

inline RunConfig parse_config_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& err) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + err.what());
    }
    return parse_config(doc);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::string& path) { return parse_config_text(read_file(path)); }

// Fully resolved configuration: phi_r and c1 are always written as numbers.
inline Json config_to_json(const RunConfig& run) {
    const ExperimentConfig& e = run.experiment;
    Json j;
    j["n_max"] = e.n_max;
    j["n_bar"] = e.feedback.n_bar;
    j["phi"] = e.phi;
    j["phi_r"] = e.resolved_phi_r();
    j["c1"] = e.feedback.c1;
    j["epsilon"] = e.feedback.epsilon;
    j["alpha_bar"] = e.feedback.alpha_bar;
    j["grid_points"] = e.feedback.grid_points;
    j["eta_f"] = e.eta_f;
    j["steps"] = e.steps;
    j["filter_init"] = std::string(to_string(e.filter_init));
    j["initial_state"] = std::string(to_string(e.initial_state));
    if (e.initial_state == InitialState::fock) j["initial_fock"] = e.initial_fock;
    if (e.custom_initial) j["initial_rho"] = detail::matrix_to_json(*e.custom_initial);
    if (e.custom_filter) j["filter_rho"] = detail::matrix_to_json(*e.custom_filter);
    if (!e.feedback_enabled) j["feedback_enabled"] = false;
    j["n_traj"] = run.n_traj;
    j["seed"] = run.seed;
    if (run.out) j["out"] = *run.out;
    if (run.summary) j["summary"] = *run.summary;
    return j;
}

// --------------------------- CSV writers -------------------------------------

inline constexpr const char* kTrajectoryHeader = "step,true_outcome,reported_outcome,alpha,fidelity_true,fidelity_est,v_est";
inline constexpr const char* kEnsembleHeader = "step,mean_fidelity,std_fidelity,q05,q50,q95,mean_overlap_filter";

inline std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.step);
        out += ',';
        out += to_char(r.true_outcome);
        out += ',';
        out += to_char(r.reported_outcome);
        for (double x : {r.alpha, r.fidelity_true, r.fidelity_est, r.v_est}) {
            out += ',';
            out += format_real(x);
        }
        out += '\n';
    }
    return out;
}

inline std::string ensemble_csv(const EnsembleStats& s) {
    std::string out = kEnsembleHeader;
    out += '\n';
    for (std::size_t k = 0; k < s.steps; ++k) {
        out += std::to_string(k + 1);
        for (double x : {s.mean_fidelity[k], s.std_fidelity[k], s.q05[k], s.q50[k], s.q95[k],
                         s.mean_overlap_filter[k]}) {
            out += ',';
            out += format_real(x);
        }
        out += '\n';
    }
    return out;
}

inline Json ensemble_summary(const RunConfig& run, const EnsembleStats& s) {
    Json j;
    j["config"] = config_to_json(run);
    j["n_traj"] = s.n_traj;
    j["master_seed"] = run.seed;
    for (std::size_t k : {30u, 40u, 100u}) {
        const std::string key = "fidelity_at_" + std::to_string(k);
        j[key] = k <= s.steps ? Json(s.fidelity_at(k)) : Json(nullptr);
    }
    return j;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace fockfb
