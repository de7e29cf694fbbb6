#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace fockfb;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / ("fockfb_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

// Runs the CLI with `args`, returning its exit status; stdout/stderr go to `log`.
int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + FOCKFB_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(FormatReal, twelve_significant_digits) {
    EXPECT_EQ(format_real(0.5), "0.5");
    EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_real(0.0), "0");
    EXPECT_EQ(format_real(-0.1), "-0.1");
    EXPECT_EQ(format_real(1e-20), "1e-20");
}

TEST(ParseConfig, defaults) {
    const RunConfig run = parse_config(Json::object());
    const auto& e = run.experiment;
    EXPECT_EQ(e.n_max, 15u);
    EXPECT_EQ(e.n_bar(), 3u);
    EXPECT_EQ(e.phi, 0.3);
    EXPECT_FALSE(e.phi_r.has_value());
    EXPECT_NEAR(e.feedback.c1, 1.0 / 13.0, 1e-16);
    EXPECT_EQ(e.feedback.epsilon, 0.1);
    EXPECT_EQ(e.feedback.alpha_bar, 0.1);
    EXPECT_EQ(e.feedback.grid_points, 201u);
    EXPECT_EQ(e.eta_f, 0.0);
    EXPECT_EQ(e.steps, 100u);
    EXPECT_EQ(e.filter_init, FilterInit::matched);
    EXPECT_EQ(e.initial_state, InitialState::coherent);
    EXPECT_TRUE(e.feedback_enabled);
    EXPECT_EQ(run.n_traj, 1000u);
}

TEST(ParseConfig, gain_rules) {
    EXPECT_NEAR(parse_config(Json{{"gain_rule", "commutator"}}).experiment.feedback.c1, 1.0 / 14.0, 1e-15);
    EXPECT_NEAR(parse_config(Json{{"n_bar", 5}}).experiment.feedback.c1, 1.0 / 21.0, 1e-15);
    EXPECT_EQ(parse_config(Json{{"c1", 0.2}}).experiment.feedback.c1, 0.2);
    EXPECT_THROW(parse_config(Json{{"c1", 0.2}, {"gain_rule", "simulation"}}), ConfigError);
    EXPECT_THROW(parse_config(Json{{"gain_rule", "other"}}), ConfigError);
}

TEST(ParseConfig, errors_name_the_key) {
    auto key_of = [](const Json& j) -> std::string {
        try {
            parse_config(j);
        } catch (const ConfigError& e) {
            return e.key;
        }
        return "<none>";
    };
    EXPECT_EQ(key_of(Json{{"bogus", 1}}), "bogus");
    EXPECT_EQ(key_of(Json{{"eta_f", 2.0}}), "eta_f");
    EXPECT_EQ(key_of(Json{{"eta_f", "x"}}), "eta_f");
    EXPECT_EQ(key_of(Json{{"n_max", -1}}), "n_max");
    EXPECT_EQ(key_of(Json{{"grid_points", 200}}), "grid_points");
    EXPECT_EQ(key_of(Json{{"filter_init", "psychic"}}), "filter_init");
    EXPECT_EQ(key_of(Json{{"initial_state", "custom"}}), "initial_rho");
    EXPECT_EQ(key_of(Json{{"filter_init", "custom"}, {"filter_rho", {{1, 0}, {0, 0}}}}), "filter_rho");
    EXPECT_EQ(key_of(Json{{"feedback_enabled", 1}}), "feedback_enabled");
    EXPECT_EQ(key_of(Json::array()), "<root>");
    EXPECT_THROW(parse_config_text("{not json"), ConfigError);
}

TEST(ParseConfig, custom_matrices) {
    Json rho = Json::array();
    for (int i = 0; i < 16; ++i) {
        Json row = Json::array();
        for (int j = 0; j < 16; ++j) row.push_back(i == j ? 1.0 / 16.0 : 0.0);
        rho.push_back(row);
    }
    const auto run = parse_config(Json{{"initial_state", "custom"}, {"initial_rho", rho}});
    ASSERT_TRUE(run.experiment.custom_initial.has_value());
    EXPECT_EQ((*run.experiment.custom_initial)(4, 4), 1.0 / 16.0);
}

TEST(ParseConfig, round_trip_through_json) {
    const auto run = parse_config(Json{{"phi", 0.25}, {"eta_f", 0.1}, {"filter_init", "uniform"}, {"seed", 42},
                                       {"steps", 40}, {"initial_state", "fock"}, {"initial_fock", 2}});
    const Json j = config_to_json(run);
    EXPECT_EQ(j["phi_r"].get<double>(), mid_fringe_phi_r(0.25, 3));
    const auto again = parse_config(j);
    EXPECT_EQ(config_to_json(again), j);
    EXPECT_EQ(again.experiment.filter_init, FilterInit::uniform);
    EXPECT_EQ(again.seed, 42u);
    EXPECT_EQ(again.experiment.initial_fock, 2u);
}

TEST(Csv, trajectory_layout) {
    const auto recs = run_trajectory(parse_config(Json::object()).experiment, 42);
    const auto rows = lines(trajectory_csv(recs));
    ASSERT_EQ(rows.size(), 101u);
    EXPECT_EQ(rows[0], "step,true_outcome,reported_outcome,alpha,fidelity_true,fidelity_est,v_est");
    for (std::size_t k = 1; k < rows.size(); ++k) {
        std::istringstream in(rows[k]);
        std::vector<std::string> cells;
        for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 7u);
        EXPECT_EQ(cells[0], std::to_string(k));
        EXPECT_TRUE(cells[1] == "g" || cells[1] == "e");
        EXPECT_NEAR(std::stod(cells[4]), recs[k - 1].fidelity_true, 1e-11);
    }
}

TEST(Csv, ensemble_layout_and_summary) {
    RunConfig run = parse_config(Json{{"steps", 30}});
    const auto stats = run_ensemble(run.experiment, 3, 0, 1);
    const auto rows = lines(ensemble_csv(stats));
    ASSERT_EQ(rows.size(), 31u);
    EXPECT_EQ(rows[0], "step,mean_fidelity,std_fidelity,q05,q50,q95,mean_overlap_filter");
    const Json s = ensemble_summary(run, stats);
    EXPECT_EQ(s["n_traj"], 3);
    EXPECT_EQ(s["master_seed"], 0);
    EXPECT_EQ(s["fidelity_at_30"].get<double>(), stats.fidelity_at(30));
    EXPECT_TRUE(s["fidelity_at_40"].is_null());
    EXPECT_TRUE(s["fidelity_at_100"].is_null());
    EXPECT_TRUE(s["config"].is_object());
}

TEST(Files, missing_file_is_io_error) {
    EXPECT_THROW(read_file("/nonexistent/fockfb/config.json"), IoError);
    EXPECT_THROW(write_file("/nonexistent/fockfb/out.csv", "x"), IoError);
}

TEST(Cli, simulate_is_byte_identical) {
    const auto dir = scratch_dir();
    ASSERT_EQ(run_cli("simulate --seed 42 --out " + (dir / "a.csv").string(), dir / "log"), 0);
    ASSERT_EQ(run_cli("simulate --seed 42 --out " + (dir / "b.csv").string(), dir / "log"), 0);
    const std::string a = read_file((dir / "a.csv").string());
    EXPECT_EQ(a, read_file((dir / "b.csv").string()));
    EXPECT_EQ(lines(a).size(), 101u);
    // Same bytes as the library path.
    EXPECT_EQ(a, trajectory_csv(run_trajectory(parse_config(Json::object()).experiment, 42)));
}

TEST(Cli, config_errors_exit_2) {
    const auto dir = scratch_dir();
    write_file((dir / "bad.json").string(), R"({"n_bar": 3, "colour": "blue"})");
    EXPECT_EQ(run_cli("params --config " + (dir / "bad.json").string(), dir / "log"), 2);
    EXPECT_NE(read_file((dir / "log").string()).find("colour"), std::string::npos);

    EXPECT_EQ(run_cli("simulate --phi 0 --out " + (dir / "x.csv").string(), dir / "log"), 2);
    EXPECT_NE(read_file((dir / "log").string()).find("phi"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "x.csv"));

    EXPECT_EQ(run_cli("simulate --eta-f 1.5 --out " + (dir / "x.csv").string(), dir / "log"), 2);
    EXPECT_EQ(run_cli("frobnicate", dir / "log"), 2);
}

TEST(Cli, io_errors_exit_3) {
    const auto dir = scratch_dir();
    EXPECT_EQ(run_cli("params --config /nonexistent/fockfb.json", dir / "log"), 3);
    EXPECT_EQ(run_cli("simulate --out /nonexistent/dir/t.csv", dir / "log"), 3);
}

TEST(Cli, verify_exit_codes) {
    const auto dir = scratch_dir();
    EXPECT_EQ(run_cli("verify --trials 50", dir / "log"), 0);
    const auto out = lines(read_file((dir / "log").string()));
    EXPECT_EQ(out.size(), 6u);
    for (const auto& l : out) EXPECT_NE(l.find("PASS"), std::string::npos) << l;
    EXPECT_EQ(run_cli("verify --trials 50 --phi 0", dir / "log"), 1);
    EXPECT_NE(read_file((dir / "log").string()).find("FAIL"), std::string::npos);
}

TEST(Cli, ensemble_outputs) {
    const auto dir = scratch_dir();
    ASSERT_EQ(run_cli("ensemble --trajectories 1 --steps 40 --seed 3 --out " + (dir / "e.csv").string() +
                          " --summary " + (dir / "s.json").string(),
                      dir / "log"),
              0);
    const auto rows = lines(read_file((dir / "e.csv").string()));
    ASSERT_EQ(rows.size(), 41u);
    const Json s = Json::parse(read_file((dir / "s.json").string()));
    EXPECT_EQ(s["n_traj"], 1);
    EXPECT_EQ(s["master_seed"], 3);
    EXPECT_FALSE(s["fidelity_at_40"].is_null());
    EXPECT_TRUE(s["fidelity_at_100"].is_null());
    // One trajectory: zero spread, quantiles equal to the mean.
    std::istringstream in(rows[40]);
    std::vector<std::string> c;
    for (std::string x; std::getline(in, x, ',');) c.push_back(x);
    EXPECT_EQ(c[2], "0");
    EXPECT_EQ(c[1], c[3]);
    EXPECT_EQ(c[1], c[5]);
}

TEST(Cli, params_reflects_overrides) {
    const auto dir = scratch_dir();
    ASSERT_EQ(run_cli("params --eta-f 0.1 --seed 9", dir / "log"), 0);
    const Json j = Json::parse(read_file((dir / "log").string()));
    EXPECT_EQ(j["eta_f"].get<double>(), 0.1);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_NEAR(j["c1"].get<double>(), 1.0 / 13.0, 1e-16);
}
