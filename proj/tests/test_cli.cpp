#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ionlc/run.hpp"

using namespace ionlc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("ionlc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    // Runs the binary; returns its exit status.
    int run(const std::string& sub, const fs::path& config, const fs::path& out, const std::string& extra = {}) const {
        const std::string cmd = std::string(IONLC_CLI_PATH) + " " + sub + " --config " + config.string() + " --out " +
                                out.string() + " " + extra + " > " + (dir_ / "log.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    json summary(const fs::path& out) const { return json::parse(slurp(out / "summary.json")); }

    fs::path dir_;
};

}  // namespace

TEST(Config, RoundTripThroughEcho) {
    const RunConfig c = parse_config_text(R"({
        "mode": "sweep", "preset": "si",
        "device": {"eta": 0.25, "omega_i_hz": 1.1e6},
        "truncation": {"lc": 3, "motion": 5},
        "sweep": {"axis": "gamma_heat_per_s", "values": [0.1, 0.2]},
        "workers": 3, "seed": 7, "output": {"dir": "x"}})");
    EXPECT_EQ(parse_config(echo(c)), c);
    EXPECT_EQ(echo(parse_config(echo(c))), echo(c));
    EXPECT_EQ(parse_config(echo(RunConfig{})), RunConfig{});
}

TEST(Config, UnknownKeysRejectedWithTheirName) {
    try {
        parse_config_text(R"({"mode": "params", "device": {"omega_ii_hz": 1.0}})");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("omega_ii_hz"), std::string::npos);
    }
    EXPECT_THROW(parse_config_text(R"({"mode": "params", "typo": 1})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"mode": "params", "truncation": {"lcc": 3}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"mode": "oops"})"), ConfigError);
    EXPECT_THROW(parse_config_text("{not json"), ConfigError);
}

TEST(Config, ValidationRules) {
    EXPECT_THROW(parse_config_text(R"({"mode": "sweep", "sweep": {"values": []}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"mode": "params", "truncation": {"lc": 1}})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"mode": "params", "integrator": {"tolerance": 1e-3}})"), ConfigError);
}

TEST(Config, HzKeysBecomeAngularFrequencies) {
    const RunConfig c = parse_config_text(R"({"mode": "params", "device": {"omega_i_hz": 12.5, "nu_hz": 900.0}})");
    const DeviceParams p = build_params(c);
    EXPECT_DOUBLE_EQ(p.omega_i, kTwoPi * 12.5);
    EXPECT_DOUBLE_EQ(p.nu, kTwoPi * 900.0);
}

TEST(Config, SiPresetRederivesCoupling) {
    const RunConfig c = parse_config_text(R"({"mode": "params", "preset": "si", "device": {"h_m": 50e-6}})");
    EXPECT_NEAR(build_params(c).g0, si_design().g0 / 2.0, 1e-9 * si_design().g0);
}

TEST(Output, SweepCsvSchema) {
    const std::string csv = sweep_csv({{kTwoPi * 5.0, 0.05, 1e-3, 2, 0.05}});
    const auto l = lines(csv);
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0], "delta,gamma,infidelity,n,alpha");
    EXPECT_EQ(l[1].substr(l[1].find(",2,")), ",2,0.050000000000000003");
}

TEST(Output, FullPrecisionNumbers) {
    EXPECT_EQ(std::stod(format_number(kPi)), kPi);
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST_F(Cli, ParamsSiDefaults) {
    const fs::path out = dir_ / "params";
    ASSERT_EQ(run("params", fs::path(IONLC_CONFIG_DIR) / "params_si.json", out), kExitOk) << slurp(dir_ / "log.txt");
    const json s = summary(out);
    EXPECT_EQ(s["status"], "ok");
    const double g0 = s["scalars"]["g0_over_2pi_hz"];
    EXPECT_GE(g0, 160e3);
    EXPECT_LE(g0, 210e3);
    EXPECT_EQ(parse_config(s["config"]).preset, "si");
}

TEST_F(Cli, SwapSeriesColumnsAndByteIdenticalRerun) {
    const fs::path cfg = fs::path(IONLC_CONFIG_DIR) / "protocol_swap.json";
    ASSERT_EQ(run("protocol", cfg, dir_ / "a"), kExitOk) << slurp(dir_ / "log.txt");
    ASSERT_EQ(run("protocol", cfg, dir_ / "b"), kExitOk);
    const std::string a = slurp(dir_ / "a" / "series.csv");
    EXPECT_EQ(lines(a).front(), "time,P_lc,P_motion,norm");
    EXPECT_GT(lines(a).size(), 10u);
    EXPECT_EQ(a, slurp(dir_ / "b" / "series.csv"));
    const json s = summary(dir_ / "a");
    EXPECT_TRUE(s["truncation_converged"].get<bool>());
    EXPECT_TRUE(s.contains("truncation_delta"));
}

TEST_F(Cli, BudgetWithZeroRates) {
    const fs::path cfg = write_config("budget.json", R"({
        "mode": "protocol", "preset": "si",
        "device": {"kappa_lc_per_s": 0.0, "gamma_heat_per_s": 0.0},
        "truncation": {"lc": 3, "motion": 3},
        "integrator": {"tolerance": 1e-9},
        "protocol": {"name": "full_budget"}, "workers": 4})");
    ASSERT_EQ(run("protocol", cfg, dir_ / "o"), kExitOk) << slurp(dir_ / "log.txt");
    EXPECT_LT(summary(dir_ / "o")["scalars"]["process_infidelity"].get<double>(), 1e-3);
}

TEST_F(Cli, SweepRowsPerPoint) {
    const fs::path cfg = write_config("sweep.json", R"({
        "mode": "sweep", "truncation": {"lc": 2, "motion": 4},
        "sweep": {"axis": "delta_hz", "values": [5.0, 10.0], "gamma_heat_per_s": 0.05},
        "workers": 2})");
    ASSERT_EQ(run("sweep", cfg, dir_ / "o"), kExitOk) << slurp(dir_ / "log.txt");
    const auto rows = lines(slurp(dir_ / "o" / "sweep.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "delta,gamma,infidelity,n,alpha");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double delta, gamma, infid, alpha;
        int n;
        char c;
        std::istringstream in(rows[i]);
        in >> delta >> c >> gamma >> c >> infid >> c >> n >> c >> alpha;
        ASSERT_FALSE(in.fail()) << rows[i];
        EXPECT_GT(infid, 0.0);
        EXPECT_GE(n, 1);
        EXPECT_DOUBLE_EQ(gamma, 0.05);
    }
}

TEST_F(Cli, EmptySweepIsValidationError) {
    const fs::path cfg = write_config("bad.json", R"({"mode": "sweep", "sweep": {"values": []}})");
    EXPECT_EQ(run("sweep", cfg, dir_ / "o"), kExitValidation);
}

TEST_F(Cli, UnknownKeyAndModeMismatchAreValidationErrors) {
    const fs::path typo = write_config("typo.json", R"({"mode": "params", "device": {"etaa": 0.1}})");
    EXPECT_EQ(run("params", typo, dir_ / "o"), kExitValidation);
    EXPECT_NE(slurp(dir_ / "log.txt").find("etaa"), std::string::npos);
    const fs::path ok = write_config("ok.json", R"({"mode": "params"})");
    EXPECT_EQ(run("simulate", ok, dir_ / "o"), kExitValidation);
}

TEST_F(Cli, NumericalFailureIsRecorded) {
    // an absurd LC frequency in the lab frame drives the step size to zero
    const fs::path cfg = write_config("nf.json", R"({"mode": "simulate", "device": {"omega_lc_hz": 1e305},
        "simulate": {"hamiltonian": "lab"}})");
    ASSERT_EQ(run("simulate", cfg, dir_ / "o"), kExitNumerical);
    const json s = summary(dir_ / "o");
    EXPECT_EQ(s["status"], "numerical_failure");
    EXPECT_TRUE(s.contains("error"));
}
