#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "surreal/data.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("surreal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs the binary inside the scratch directory; stdout goes to out_.
    int run(const std::string& args) {
        const std::string cmd = "cd '" + dir_.string() + "' && '" SURREAL_CLI "' " + args + " > stdout.txt 2> stderr.txt";
        const int status = std::system(cmd.c_str());
        out_ = slurp(dir_ / "stdout.txt");
        err_ = slurp(dir_ / "stderr.txt");
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    std::vector<json> lines(const fs::path& p) {
        std::vector<json> out;
        std::istringstream in(slurp(dir_ / p));
        for (std::string line; std::getline(in, line);) out.push_back(json::parse(line));
        return out;
    }

    void small_blobs(const std::string& name, int seed = 7) {
        ASSERT_EQ(run("gen --kind blobs --classes 2 --per-class 4 --height 16 --width 16 --seed " +
                      std::to_string(seed) + " --out " + name),
                  0)
            << err_;
    }

    fs::path dir_;
    std::string out_, err_;
};

}  // namespace

TEST_F(Cli, GenModulationCount) {
    ASSERT_EQ(run("gen --kind modulation --classes 4 --per-class 500 --snr 10 --seed 7 --out d.cvds"), 0) << err_;
    EXPECT_EQ(json::parse(out_)["n"], 2000);
    EXPECT_EQ(fs::file_size(dir_ / "d.cvds"), surreal::cvds_file_size(2000, {1, 1, 128}));
    EXPECT_EQ(surreal::read_cvds(dir_ / "d.cvds").size(), 2000u);
}

TEST_F(Cli, GenDeterministic) {
    ASSERT_EQ(run("gen --kind modulation --per-class 20 --seed 3 --out a.cvds"), 0);
    ASSERT_EQ(run("gen --kind modulation --per-class 20 --seed 3 --out b.cvds"), 0);
    EXPECT_EQ(slurp(dir_ / "a.cvds"), slurp(dir_ / "b.cvds"));
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("gen --kind modulation"), 2);
    EXPECT_EQ(run("gen --kind sparkles --out x.cvds"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("verify --property nope"), 2);
    EXPECT_EQ(run("train --data missing.cvds --lr -1"), 2);
}

TEST_F(Cli, IoErrors) {
    EXPECT_EQ(run("eval --checkpoint nowhere.srck --data nothing.cvds"), 3);
    EXPECT_EQ(run("train --data nothing.cvds --epochs 1"), 3);
    std::ofstream(dir_ / "junk.cvds") << "XVDS garbage";
    EXPECT_EQ(run("train --data junk.cvds --epochs 1"), 3);
}

TEST_F(Cli, ZeroEpochsWritesInitialCheckpoint) {
    small_blobs("b.cvds");
    ASSERT_EQ(run("train --data b.cvds --epochs 0 --out r --quiet"), 0) << err_;
    EXPECT_TRUE(fs::exists(dir_ / "r/checkpoint.srck"));
    EXPECT_TRUE(lines("r/metrics.jsonl").empty());
}

TEST_F(Cli, ResumeContinuesNumbering) {
    small_blobs("b.cvds");
    small_blobs("t.cvds", 8);
    ASSERT_EQ(run("train --data b.cvds --test t.cvds --epochs 1 --out r --quiet"), 0) << err_;
    ASSERT_EQ(run("train --resume r/checkpoint.srck --epochs 3 --quiet"), 0) << err_;
    const auto m = lines("r/metrics.jsonl");
    ASSERT_EQ(m.size(), 6u);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(m[i]["epoch"], i / 2 + 1);
        EXPECT_EQ(m[i]["split"], i % 2 ? "test" : "train");
    }
}

TEST_F(Cli, ResumeMatchesUninterrupted) {
    small_blobs("b.cvds");
    ASSERT_EQ(run("train --data b.cvds --epochs 2 --out a --quiet"), 0);
    ASSERT_EQ(run("train --data b.cvds --epochs 1 --out b --quiet"), 0);
    ASSERT_EQ(run("train --resume b/checkpoint.srck --epochs 2 --quiet"), 0);
    const auto a = lines("a/metrics.jsonl"), b = lines("b/metrics.jsonl");
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i]["loss"], b[i]["loss"]);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    small_blobs("b.cvds");
    std::ofstream(dir_ / "run.cfg") << "# tiny\ndataset = b.cvds\nepochs = 1\nbatch = 4\nout_dir = fromfile\n";
    ASSERT_EQ(run("train --config run.cfg --out fromflag --quiet"), 0) << err_;
    EXPECT_TRUE(fs::exists(dir_ / "fromflag/checkpoint.srck"));
    EXPECT_FALSE(fs::exists(dir_ / "fromfile"));
    EXPECT_EQ(lines("fromflag/metrics.jsonl").size(), 1u);
    std::ofstream(dir_ / "bad.cfg") << "speed = fast\n";
    EXPECT_EQ(run("train --config bad.cfg"), 2);
}

TEST_F(Cli, OverfitThenEvaluate) {
    small_blobs("b.cvds");
    ASSERT_EQ(run("train --data b.cvds --epochs 40 --batch 8 --lr 0.01 --out r --quiet"), 0) << err_;
    ASSERT_EQ(run("eval --checkpoint r/checkpoint.srck --data b.cvds"), 0) << err_;
    const auto j = json::parse(out_);
    EXPECT_EQ(j["accuracy"], 1.0);
    for (const auto& row : j["confusion"]) {
        int sum = 0;
        for (const auto& v : row) sum += v.get<int>();
        EXPECT_EQ(sum, 4);
    }

    ASSERT_EQ(run("eval --checkpoint r/checkpoint.srck --data b.cvds --augment-scale 5"), 0) << err_;
    const auto a = json::parse(out_);
    EXPECT_LT(std::abs(a["accuracy_drop"].get<double>()), 0.005);
    EXPECT_EQ(lines("r/augment-5.jsonl").size(), 8u);
}

TEST_F(Cli, VerifyJsonLines) {
    ASSERT_EQ(run("verify --property wrap --property softmax --trials 100 --seed 4"), 0) << err_;
    std::istringstream in(out_);
    int n = 0;
    for (std::string line; std::getline(in, line); ++n) EXPECT_NO_THROW(json::parse(line));
    EXPECT_EQ(n, 3);
    EXPECT_EQ(run("verify --property equivariance --trials 10000"), 0);
    EXPECT_LT(json::parse(out_.substr(0, out_.find('\n')))["max_error"].get<double>(), 1e-9);
}

TEST_F(Cli, BenchCounts) {
    ASSERT_EQ(run("bench --arch surreal,real-baseline --tr-rank 0,3 --repeats 0"), 0) << err_;
    std::istringstream in(out_);
    std::vector<json> reports;
    for (std::string line; std::getline(in, line);) reports.push_back(json::parse(line));
    ASSERT_EQ(reports.size(), 4u);
    const auto count = [&](const std::string& arch, int rank) {
        for (const auto& r : reports)
            if (r["arch"] == arch && r["tr_rank"] == rank) return r["params"].get<long>();
        return -1L;
    };
    EXPECT_NEAR(count("surreal", 0), 67000, 6700);
    EXPECT_GT(count("real-baseline", 0), count("surreal", 0));
    EXPECT_LT(count("surreal", 3), count("surreal", 0));
}
