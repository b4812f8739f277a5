#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ahp/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / (std::string("ahp_cli_") + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    int run(const std::string& args) const {
        const std::string cmd = std::string("cd '") + dir.string() + "' && '" + AHP_CLI_PATH + "' " + args +
                                " > stdout.txt 2> stderr.txt";
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }
    std::string read(const std::string& name) const {
        std::ifstream in(dir / name, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    void write(const std::string& name, const std::string& text) const { std::ofstream(dir / name) << text; }

    std::vector<std::vector<double>> table(const std::string& name) const {
        std::istringstream in(read(name));
        std::string line;
        std::getline(in, line);
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            std::vector<double> r;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
            rows.push_back(r);
        }
        return rows;
    }
};

}  // namespace

TEST_F(Cli, LargePsiHalfAlphaMatchesPg) {
    write("s.csv", ahp::series_csv(oracle::normals(128, 4)));
    ASSERT_EQ(run("analyze s.csv --alpha 0.5 --psi-mult 1e6 --prefix a --no-svg"), 0) << read("stderr.txt");
    ASSERT_EQ(run("analyze s.csv --estimator pg --prefix b --no-svg"), 0) << read("stderr.txt");
    const auto a = table("a_periodogram.csv"), b = table("b_periodogram.csv");
    ASSERT_EQ(a.size(), 63u);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_DOUBLE_EQ(a[i][0], b[i][0]);
        EXPECT_NEAR(a[i][1], b[i][1], 1e-6 * b[i][1]);
    }
    EXPECT_TRUE(fs::exists(dir / "a_fisher.json"));
    EXPECT_FALSE(fs::exists(dir / "a_periodogram.svg"));
}

TEST_F(Cli, DefaultGridAndNormalize) {
    write("s.csv", "t,value\n" + [] {
        std::string s;
        const auto y = oracle::normals(100, 5);
        for (std::size_t i = 0; i < y.size(); ++i) s += std::to_string(i + 1) + "," + ahp::fmt_num(y[i]) + "\n";
        return s;
    }());
    ASSERT_EQ(run("analyze s.csv --alpha-grid --normalize --psi-mult 1.345"), 0) << read("stderr.txt");
    const auto text = read("s_periodogram.csv");
    const auto header = text.substr(0, text.find('\n'));
    EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 47);
    EXPECT_EQ(header.substr(0, 16), "freq,alpha_0.05,");
    const auto t = table("s_periodogram.csv");
    for (std::size_t j = 1; j < 47; ++j) {
        double s = 0;
        for (const auto& r : t) s += r[j];
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_TRUE(fs::exists(dir / "s_periodogram.svg"));
    const auto f = ahp::json::parse(read("s_fisher.json"));
    EXPECT_TRUE(f.is_object());
}

TEST_F(Cli, ExitCodes) {
    write("bad.csv", "value\n1\n2\nabc\n");
    EXPECT_EQ(run("analyze bad.csv --alpha 0.5"), 2);
    EXPECT_NE(read("stderr.txt").find("bad.csv:4:"), std::string::npos) << read("stderr.txt");
    write("const.csv", "1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n");
    EXPECT_EQ(run("analyze const.csv --alpha 0.5"), 3);
    write("short.csv", "1\n2\n3\n");
    EXPECT_EQ(run("analyze short.csv --alpha 0.5"), 3);
    write("ok.csv", ahp::series_csv(oracle::normals(32, 1)));
    EXPECT_EQ(run("analyze ok.csv --alpha 1.5"), 2);
    EXPECT_EQ(run("analyze ok.csv --alpha 0.5 --psi 1 --psi-mult 1"), 2);
    EXPECT_EQ(run("analyze missing.csv --alpha 0.5"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    write("cfg.json", R"({"experiment": "power_study", "seed": 1, "oops": 2})");
    EXPECT_EQ(run("experiment cfg.json"), 2);
    EXPECT_NE(read("stderr.txt").find("oops"), std::string::npos);
    EXPECT_EQ(run("simulate --model garch11 --phi1 0.5 --phi2 0.1"), 2);
}

TEST_F(Cli, SimulateIsSeeded) {
    ASSERT_EQ(run("simulate --model ar2 --n 150 --seed 7 --out a.csv"), 0) << read("stderr.txt");
    ASSERT_EQ(run("simulate --model ar2 --n 150 --seed 7 --out b.csv"), 0);
    ASSERT_EQ(run("simulate --model ar2 --n 150 --seed 8 --out c.csv"), 0);
    EXPECT_EQ(read("a.csv"), read("b.csv"));
    EXPECT_NE(read("a.csv"), read("c.csv"));
    EXPECT_EQ(ahp::parse_series_csv(read("a.csv")).size(), 150u);
    ASSERT_EQ(run("simulate --model ar2 --n 100 --seed 7 --outlier type1 --c 30 --t-star 10 --out d.csv"), 0)
        << read("stderr.txt");
    const auto d = ahp::parse_series_csv(read("d.csv"));
    double big = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (i != 9) big = std::max(big, std::abs(d[i]));
    EXPECT_GT(std::abs(d[9]), 3 * big);
}

TEST_F(Cli, SpectrogramOutputs) {
    ASSERT_EQ(run("simulate --model ar2 --n 1000 --seed 3 --out rr.csv"), 0);
    ASSERT_EQ(run("spectrogram rr.csv --window 200 --overlap 100 --alpha 0.8 --psi-mult 0.674"), 0)
        << read("stderr.txt");
    const auto j = ahp::json::parse(read("rr_spectrogram.json"));
    EXPECT_EQ(j["starts"].size(), 9u);
    EXPECT_EQ(j["starts"][0], 1);
    EXPECT_EQ(j["starts"][8], 801);
    EXPECT_EQ(table("rr_spectrogram.csv").size(), 9u * 99u);
    EXPECT_TRUE(fs::exists(dir / "rr_spectrogram.svg"));
    EXPECT_EQ(run("spectrogram rr.csv --window 200 --overlap 200"), 2);
    EXPECT_EQ(run("spectrogram rr.csv --window 2000"), 3);
}

TEST_F(Cli, ExperimentBytesIndependentOfThreads) {
    write("cfg.json", R"({"experiment": "power_study", "name": "ps", "seed": 11, "reps": 50,
        "model": {"kind": "ar2", "phi1": 0.9, "phi2": -0.9, "n": 100},
        "estimators": [{"type": "pg"}, {"type": "ep", "alpha": 0.8}, {"type": "ahp", "alpha": 0.6, "psi_mult": 0.674}],
        "contaminations": [{"kind": "type1", "c": 30}]})");
    ASSERT_EQ(run("experiment cfg.json --reps 8 --threads 1 --out-dir one"), 0) << read("stderr.txt");
    ASSERT_EQ(run("experiment cfg.json --reps 8 --threads 3 --out-dir three"), 0) << read("stderr.txt");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "one")) {
        ++files;
        const auto name = e.path().filename().string();
        EXPECT_EQ(read("one/" + name), read("three/" + name)) << name;
    }
    EXPECT_GE(files, 2u);
    ASSERT_EQ(run("experiment cfg.json --reps 8 --seed 12 --out-dir other"), 0);
    EXPECT_NE(read("one/ps.json"), read("other/ps.json"));
}
