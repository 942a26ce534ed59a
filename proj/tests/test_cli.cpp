#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wallsim/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = wallsim::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("wallsim-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"simulate", "--no-such-flag"}).code, 2);
    EXPECT_EQ(run({"energy", "--regime", "9"}).code, 2);
    EXPECT_EQ(run({"w2", "only-one.csv"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, DomainErrors) {
    EXPECT_EQ(run({"energy", "--regime", "4", "--alpha", "inv_n"}).code, 1);
    EXPECT_EQ(run({"energy", "--alpha", "const:-1"}).code, 1);
    EXPECT_EQ(run({"pde", "--regime", "5", "--grid-m", "16"}).code, 1);
    const auto r = run({"w2", "/nonexistent/a.csv", "/nonexistent/b.csv"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(Cli, EnergyOfSteadyState) {
    const auto r = run({"energy", "--regime", "3", "--density", "steady", "--grid-m", "4096"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(r.out), 4.0 / 3.0 * std::sqrt(wallsim::potential::integral()), 1e-6);
}

TEST(Cli, DiscreteEnergyMatchesLibrary) {
    const auto r = run({"energy", "--alpha", "inv_n", "--n", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    const wallsim::ScalingRegime reg{wallsim::AlphaRule::inv_n()};
    EXPECT_EQ(std::stod(r.out), wallsim::energy(wallsim::initial_condition(7), reg));
}

TEST(Cli, EquilibriumThenW2OfIdenticalInputsIsZero) {
    const auto dir = scratch("w2");
    const auto r = run({"equilibrium", "--n", "6", "--alpha", "inv_n", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto path = first_line(r.out);
    EXPECT_EQ(fs::path(path).parent_path(), dir);
    EXPECT_EQ(fs::path(path).filename().string().rfind("equilibrium-", 0), 0u);
    const auto w = run({"w2", path, path});
    ASSERT_EQ(w.code, 0) << w.err;
    EXPECT_EQ(first_line(w.out), "0");
    EXPECT_EQ(slurp(path).rfind("position,weight\n", 0), 0u);
}

TEST(Cli, SimulateWritesStates) {
    const auto dir = scratch("sim");
    const auto r = run({"simulate", "--n", "3", "--times", "0.5,1", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(first_line(r.out)));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,x_1,x_2,x_3");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
}

TEST(Cli, PdeOutputsDensityFiles) {
    const auto dir = scratch("pde");
    const auto r = run({"pde", "--regime", "3", "--grid-m", "32", "--times", "0.1,0.2", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::vector<std::string> paths;
    std::istringstream in(r.out);
    for (std::string p; std::getline(in, p);) paths.push_back(p);
    ASSERT_EQ(paths.size(), 3u);
    const auto d = wallsim::io::read_distribution_file(paths[0]);
    ASSERT_TRUE(std::holds_alternative<wallsim::DensityGrid>(d));
    EXPECT_EQ(std::get<wallsim::DensityGrid>(d).cells(), 32u);
    EXPECT_EQ(slurp(paths[0]), slurp(paths[2]));
    const auto w = run({"w2", paths[0], paths[1]});
    ASSERT_EQ(w.code, 0) << w.err;
    EXPECT_GT(std::stod(w.out), 0.0);
}

TEST(Cli, DumpConfigRoundTrip) {
    const auto dir = scratch("cfg");
    const std::vector<std::string> flags{"rate-table", "--alpha", "inv_n", "--kmax", "2",
                                         "--times", "2^-6,inf", "--out", dir.string()};
    auto dump_args = flags;
    dump_args.push_back("--dump-config");
    const auto dump = run(dump_args);
    ASSERT_EQ(dump.code, 0);
    const auto cfg = dir / "run.ini";
    std::ofstream(cfg) << dump.out;

    const auto direct = run(flags);
    ASSERT_EQ(direct.code, 0) << direct.err;
    const auto replay = run({"rate-table", "--config", cfg.string()});
    ASSERT_EQ(replay.code, 0) << replay.err;
    EXPECT_EQ(direct.out, replay.out);  // same deterministic file name

    // Flags override the file.
    const auto overridden = run({"rate-table", "--config", cfg.string(), "--kmax", "3"});
    ASSERT_EQ(overridden.code, 0) << overridden.err;
    EXPECT_NE(overridden.out, direct.out);
    EXPECT_NE(slurp(first_line(overridden.out)).find("\n2,20,inf,"), std::string::npos);
}

TEST(Cli, PlotAndCsvSchema) {
    const auto dir = scratch("plot");
    const auto r = run({"rate-table", "--alpha", "inv_n", "--kmax", "2", "--plot", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string csv, svg;
    std::getline(in, csv);
    std::getline(in, svg);
    EXPECT_EQ(slurp(csv).rfind("k,n_k,t,gamma,p\n", 0), 0u);
    EXPECT_EQ(fs::path(svg).extension(), ".svg");
}

TEST(Cli, Selftest) {
    const auto r = run({"selftest"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, ParsesCsvErrorsWithLineNumbers) {
    const auto dir = scratch("bad");
    const auto bad = dir / "bad.csv";
    std::ofstream(bad) << "position,weight\n0.1,0.5\n0.2,abc\n";
    const auto r = run({"w2", bad.string(), bad.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos);
}

TEST(Cli, AlphaParsing) {
    using wallsim::cli::parse_alpha;
    EXPECT_EQ(parse_alpha("inv_n").exponent, -1.0);
    EXPECT_EQ(parse_alpha("const:2.5").coefficient, 2.5);
    EXPECT_EQ(parse_alpha("power:1:0.5").exponent, 0.5);
    EXPECT_THROW(parse_alpha("sqrt"), wallsim::DomainError);
    EXPECT_THROW(parse_alpha("const:x"), wallsim::DomainError);
    EXPECT_EQ(wallsim::cli::parse_time("2^-6"), 1.0 / 64.0);
    EXPECT_TRUE(std::isinf(wallsim::cli::parse_time("inf")));
    EXPECT_THROW(wallsim::cli::parse_time("soon"), wallsim::DomainError);
}
