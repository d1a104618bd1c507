#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_support.hpp"

using namespace thermobox;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "thermobox");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

class Scratch : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("thermobox_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    fs::path dir_;
};

const std::vector<std::string> kFig2{"--TL", "1", "--TR", "0.2", "--muL", "-1", "--muR", "0.5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST(Io, SeventeenDigits) {
    EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_double(-kInf), "-inf");
    EXPECT_EQ(io::dump(io::Json{{"x", 1.0 / 3.0}}, 0), "{\"x\":0.33333333333333331}\n");
}

TEST(Io, BoxcarRoundTrip) {
    const BoxcarSet b({{-kInf, -0.3}, {0.1, 2.0 / 3.0}, {5.0, kInf}});
    const auto j = io::to_json(b);
    EXPECT_EQ(j[0][0], "-inf");
    EXPECT_EQ(j[2][1], "inf");
    const auto back = io::parse_boxcar(io::dump(j));
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(back.intervals()[k].a, b.intervals()[k].a);
        EXPECT_EQ(back.intervals()[k].b, b.intervals()[k].b);
    }
    EXPECT_THROW(io::parse_boxcar("[[1, 0]]"), DomainError);
    EXPECT_THROW(io::parse_boxcar("[[0, \"big\"]]"), DomainError);
    EXPECT_THROW(io::parse_boxcar("[[0, 1"), DomainError);
}

TEST(Io, SweepHeader) {
    std::ostringstream os;
    io::write_sweep_csv(os, {});
    EXPECT_EQ(os.str(), "dmu,I,J,var_model,fano_model_scaled,var_opt,fano_opt_scaled\n");
}

TEST(Cli, EvalZeroTransmissionGivesZeroCurrents) {
    const auto r = run(with({"eval", "--model", "zero"}, kFig2));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    for (const char* k : {"I", "J", "var_I", "sigma", "P"}) EXPECT_EQ(j["summary"][k].get<double>(), 0.0) << k;
    EXPECT_TRUE(j["summary"]["fano"].is_null());
}

TEST(Cli, EvalBoxcarMatchesLibrary) {
    const auto r = run(with({"eval", "--boxcar", "[[0.5, 2]]"}, kFig2));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    const auto lib = boxcar_integrals(thermobox::testing::fig2(), BoxcarSet({{0.5, 2.0}}));
    EXPECT_NEAR(j["summary"]["I"].get<double>(), lib.I, 1e-12);
    EXPECT_NEAR(j["summary"]["var_I"].get<double>(), lib.var, 1e-12);
}

TEST(Cli, InverseTemperaturesAreAccepted) {
    const auto a = run(with({"eval", "--model", "unit"}, kFig2));
    const auto b = run({"eval", "--model", "unit", "--betaL", "1", "--betaR", "5", "--muL", "-1", "--muR", "0.5"});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Scratch, MixedReservoirFlagsAreRejectedWithoutOutput) {
    const auto out = path("o.json");
    const auto r = run({"eval", "--model", "zero", "--TL", "1", "--betaR", "5", "--muL", "0", "--muR", "1", "-o", out});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("not both"), std::string::npos);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Scratch, ValidationErrorsCreateNoFiles) {
    const std::vector<std::vector<std::string>> bad{
        with({"eval", "--model", "dqd", "--Gamma", "-1", "--Omega", "0.1"}, kFig2),
        with({"eval", "--model", "zero", "--boxcar", "[[0,1]]"}, kFig2),
        {"eval", "--model", "zero", "--TL", "0", "--TR", "1", "--muL", "0", "--muR", "1"},
        with({"optimize", "--I", "0.01"}, kFig2),
        with({"oracle", "--I", "0.01", "--J", "0.1", "--N", "20", "--mode", "exhaustive"}, kFig2),
        with({"oracle", "--I", "0.01", "--J", "0.1", "--lo", "1"}, kFig2),
        {"sweep", "--beta", "-2"},
        {"linear", "--boxcar", "[[0,1]]", "--dbeta", "3"},
        {"region", "--TL", "1", "--TR", "1", "--muL", "0", "--muR", "0"},
        {"nonsense"},
    };
    for (auto args : bad) {
        const auto out = path("o.json");
        args.push_back("-o");
        args.push_back(out);
        const auto r = run(args);
        EXPECT_EQ(r.code, 1) << args[0] << ": " << r.err;
        EXPECT_FALSE(fs::exists(out)) << args[0];
    }
    const auto r = run(with({"region", "--grid-i", "0", "--out-dir", path("rg")}, kFig2));
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(path("rg")));
}

TEST_F(Scratch, ConfigFillsAndFlagsOverride) {
    const auto cfg = path("c.json");
    std::ofstream(cfg) << R"({"TL": 1, "TR": 0.2, "muL": -1, "muR": 0.5, "boxcar": [[0.5, 2]]})";
    const auto from_cfg = run({"eval", "--config", cfg});
    const auto from_flags = run(with({"eval", "--boxcar", "[[0.5,2]]"}, kFig2));
    ASSERT_EQ(from_cfg.code, 0) << from_cfg.err;
    EXPECT_EQ(from_cfg.out, from_flags.out);
    const auto over = run({"eval", "--config", cfg, "--muR", "0.7"});
    ASSERT_EQ(over.code, 0);
    EXPECT_EQ(io::Json::parse(over.out)["reservoirs"]["mu_R"].get<double>(), 0.7);

    std::ofstream(path("bad.json")) << R"({"TL": 1, "colour": "red"})";
    const auto bad = run({"eval", "--config", path("bad.json")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("colour"), std::string::npos);
}

TEST(Cli, InfeasibleTargetIsExitTwo) {
    const auto r = run(with({"optimize", "--I", "0.3", "--J", "0.5"}, kFig2));
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Scratch, OptimizeWritesSolutionAndBoxcar) {
    const auto r = run(with({"optimize", "--I", "0.05", "--J", "0.1", "-o", path("s.json"), "--boxcar-out",
                             path("b.json")},
                            kFig2));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = io::Json::parse(slurp(path("s.json")));
    EXPECT_NEAR(s["solution"]["I"].get<double>(), 0.05, 1e-9);
    const auto box = io::parse_boxcar(slurp(path("b.json")));
    const auto lib = boxcar_integrals(thermobox::testing::fig2(), box);
    EXPECT_NEAR(lib.var, s["solution"]["var_opt"].get<double>(), 1e-12);
}

TEST_F(Scratch, SweepIsDeterministic) {
    const std::vector<std::string> args{"sweep", "--dmu", "0.05,0.5,3", "--threads", "3"};
    const auto a = run(with(args, {"-o", path("a.csv")}));
    const auto b = run({"sweep", "--dmu", "0.05,0.5,3", "--threads", "1", "-o", path("b.csv")});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    const auto text = slurp(path("a.csv"));
    EXPECT_EQ(text, slurp(path("b.csv")));
    std::istringstream in(text);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "dmu,I,J,var_model,fano_model_scaled,var_opt,fano_opt_scaled");
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 3);
}

TEST(Cli, SweepMinimumModelFano) {
    const auto r = run({"sweep", "--Gamma", "0.1", "--Omega", "0.05", "--omega", "0", "--beta", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    double mn = kInf;
    while (std::getline(in, line)) {
        std::vector<double> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(std::stod(c));
        ASSERT_EQ(cells.size(), 7u);
        mn = std::min(mn, cells[4]);
    }
    EXPECT_NEAR(mn, 1.86, 0.02);
}

TEST(Cli, OracleGridAlignedTargetPasses) {
    const auto res = thermobox::testing::fig2();
    const auto [m, iv] = thermobox::testing::compact_optimum(res);
    const auto bi = boxcar_integrals(res, BoxcarSet({iv}));
    const double h = (iv.b - iv.a) / 4.0;
    const auto r = run(with({"oracle", "--I", io::format_double(bi.I), "--J", io::format_double(bi.J), "--N", "16",
                             "--lo", io::format_double(iv.a - 6.0 * h), "--hi", io::format_double(iv.b + 6.0 * h),
                             "--tol", "1e-12"},
                            kFig2));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_EQ(j["verdict"], "PASS");
    EXPECT_EQ(j["N"], 16);
    for (const char* k : {"continuous_var", "discrete_Q", "discrete_L", "snapped_var", "gaps", "window"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_LE(std::abs(j["gaps"]["Q_minus_var"].get<double>()), 1e-9);
}

TEST(Cli, LinearAtEqualTemperaturesIsTwo) {
    const auto r = run({"linear", "--dbetamu", "0.01", "--boxcar", "[[-1, 1]]"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::Json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["linear"]["ratio"].get<double>(), 2.0);
    EXPECT_NEAR(j["nonlinear"]["tur_ratio"].get<double>(), 2.0, 0.01);
}

TEST_F(Scratch, RegionBundle) {
    const auto r = run({"region", "--TL", "1", "--TR", "0.2", "--muL", "0.1", "--muR", "0.6", "--grid-i", "6",
                        "--grid-j", "6", "--boundary-points", "9", "--bifurcation-points", "20", "--out-dir",
                        path("rg")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    auto first_line = [&](const char* f) {
        std::ifstream in(dir_ / "rg" / f);
        std::string line;
        std::getline(in, line);
        return line;
    };
    EXPECT_EQ(first_line("boundary.csv"), "I,J_min,J_max,eps1");
    EXPECT_EQ(first_line("bifurcations.csv"), "tag,lambda,eta,I,J");
    EXPECT_EQ(first_line("topology.csv"), "I,J,count,left_inf,right_inf");
    const auto j = io::Json::parse(slurp(dir_ / "rg" / "region.json"));
    // grid points outside the feasible region are skipped
    EXPECT_GT(j["topology"].size(), 0u);
    EXPECT_LE(j["topology"].size(), 36u);
    std::ifstream topo(dir_ / "rg" / "topology.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(topo, line);) ++lines;
    EXPECT_EQ(lines, j["topology"].size() + 1);
    EXPECT_EQ(j["boundary"].size(), 9u);
}
