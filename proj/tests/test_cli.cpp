#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
    std::vector<std::string> lines() const {
        std::vector<std::string> v;
        std::istringstream is(out);
        for (std::string l; std::getline(is, l);) v.push_back(l);
        return v;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("snic_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliRun run(const std::string& args) {
        fs::path err = dir_ / "stderr.txt";
        std::string cmd = std::string(SNIC_CLI_PATH) + " " + args + " 2>" + err.string();
        CliRun r;
        FILE* p = ::popen(cmd.c_str(), "r");
        if (!p) return r;
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
        int st = ::pclose(p);
        r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        r.err = slurp(err);
        return r;
    }

    std::set<std::string> csv_labels(const fs::path& f, std::size_t col) {
        std::set<std::string> s;
        std::ifstream in(f);
        std::string line;
        std::getline(in, line);
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string c;
            for (std::size_t i = 0; i <= col; ++i) std::getline(ls, c, ',');
            s.insert(c);
        }
        return s;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, ClassifyOrigin) {
    auto r = run("classify --mu1 0 --mu2 0 --mu3 0");
    ASSERT_EQ(r.code, 0) << r.err;
    auto l = r.lines();
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(json::parse(l[0])["command"], "classify");
    auto res = json::parse(l[1]);
    EXPECT_EQ(res["region"], "NonCentralSNICeroclinic");
    EXPECT_EQ(res["loop_type"], "TypeI");
}

TEST_F(Cli, ClassifyPeriodicQuadrant) {
    auto r = run("classify --mu1 0 --mu2 -0.05 --mu3 0.05");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.lines().at(1))["region"], "PeriodicOrbitBothSeparatrices");
}

TEST_F(Cli, ClassifyBadNumberIsUsageError) {
    auto r = run("classify --mu1 0 --mu2 0 --mu3 abc");
    EXPECT_EQ(r.code, 2);
    auto e = json::parse(r.err);
    EXPECT_TRUE(e.contains("error"));
}

TEST_F(Cli, ClassifyInvalidParameters) {
    EXPECT_EQ(run("classify --mu1 0 --mu2 0 --mu3 0 --delta -1").code, 2);
    EXPECT_EQ(run("classify --mu1 0 --mu2 0 --mu3 0 --ls -1").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, SliceLabelCounts) {
    auto r0 = run("slice --mu1 0 --out " + (dir_ / "z").string());
    ASSERT_EQ(r0.code, 0) << r0.err;
    auto l0 = csv_labels(dir_ / "z" / "slice.csv", 2);
    EXPECT_GE(l0.size(), 8u);
    EXPECT_TRUE(fs::exists(dir_ / "z" / "slice.svg"));

    auto rn = run("slice --mu1 -0.1 --format csv --out " + (dir_ / "n").string());
    ASSERT_EQ(rn.code, 0) << rn.err;
    auto ln = csv_labels(dir_ / "n" / "slice.csv", 2);
    EXPECT_EQ(ln, (std::set<std::string>{"HomoclinicP2", "NoInvariantSet", "PeriodicOrbitGamma2Only"}));
    EXPECT_FALSE(fs::exists(dir_ / "n" / "slice.svg"));
    EXPECT_EQ(slurp(dir_ / "n" / "slice.csv").rfind("# schema: v1\nmu2,mu3,region,g1,g2\n", 0), 0u);
}

TEST_F(Cli, SliceRejectsSingleNode) {
    EXPECT_EQ(run("slice --mu1 0 --n 1 --out " + dir_.string()).code, 2);
    EXPECT_EQ(run("slice --mu1 0 --format png --out " + dir_.string()).code, 2);
}

TEST_F(Cli, SphereLabelsAndBounds) {
    auto r = run("sphere --radius 0.01 --samples 5000 --format csv,jsonl --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto labels = csv_labels(dir_ / "sphere.csv", 5);
    // open regions on a small sphere; curves and mu1 = 0 labels have measure zero
    EXPECT_TRUE(labels.count("NoInvariantSet"));
    EXPECT_TRUE(labels.count("PeriodicOrbitGamma2Only"));
    EXPECT_TRUE(labels.count("PeriodicOrbitBothSeparatrices"));
    std::ifstream js(dir_ / "sphere.jsonl");
    std::string first;
    std::getline(js, first);
    EXPECT_TRUE(json::parse(first).contains("px"));
    EXPECT_EQ(run("sphere --radius 0.02 --samples 10 --out " + dir_.string()).code, 2);
    EXPECT_EQ(run("sphere --radius 0.01 --samples 0 --out " + dir_.string()).code, 2);
}

TEST_F(Cli, PortraitLoopConfiguration) {
    auto r = run("portrait --params eps=1,a=0.042,b=0.49575,c=-0.8502 --ic 0.5,0.3 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto res = json::parse(r.lines().at(1));
    int saddles = 0, sn = 0;
    for (auto& e : res["equilibria"]) {
        saddles += e["class"] == "Saddle";
        sn += e["class"] == "SaddleNodeCandidate" || std::abs(e["x"].get<double>() + 4.95) < 0.1;
    }
    EXPECT_GE(saddles, 1);
    EXPECT_GE(sn, 2);
    // the unstable separatrix of the right saddle comes back near the fold pair
    std::ifstream in(dir_ / "portrait.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(line, "kind,id,t,x,y");
    double best = 1e300;
    while (std::getline(in, line)) {
        if (line.rfind("unstable,", 0) != 0) continue;
        std::istringstream ls(line);
        std::string k, id, t, x, y;
        std::getline(ls, k, ','), std::getline(ls, id, ','), std::getline(ls, t, ','), std::getline(ls, x, ','),
            std::getline(ls, y, ',');
        best = std::min(best, std::hypot(std::stod(x) + 4.9516, std::stod(y) + 2.2752));
    }
    EXPECT_LT(best, 0.05);
    auto svg = slurp(dir_ / "portrait.svg");
    EXPECT_NE(svg.find("class=\"Saddle\""), std::string::npos);
}

TEST_F(Cli, PortraitGtpaseReversed) {
    auto r = run("portrait --model gtpase --reverse --box 0,4,0,3 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "equilibria.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "portrait.svg"));
}

TEST_F(Cli, PortraitUnknownModel) {
    auto r = run("portrait --model nope --out " + dir_.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.err)["error"], "ParameterError");
}

TEST_F(Cli, PortraitModelFile) {
    std::ofstream(dir_ / "m.json") << R"({"expr_x": "y", "expr_y": "-x - k*y", "params": {"k": 0.5}})";
    auto r = run("portrait --model " + (dir_ / "m.json").string() + " --box -1,1,-1,1 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto res = json::parse(r.lines().at(1));
    ASSERT_EQ(res["equilibria"].size(), 1u);
    EXPECT_EQ(res["equilibria"][0]["class"], "StableFocus");
}

TEST_F(Cli, ContinueEventsAndDeterminism) {
    std::string base = "continue --params eps=1,a=0.042,b=0.35 --param c --range=-2.5,2.5 --no-periodic";
    auto a = run(base + " --out " + (dir_ / "a").string());
    ASSERT_EQ(a.code, 0) << a.err;
    auto res = json::parse(a.lines().at(1));
    EXPECT_EQ(res["SN"], 3);
    EXPECT_EQ(res["HB"], 2);
    auto ev = json::parse(slurp(dir_ / "a" / "events.json"));
    EXPECT_EQ(ev["events"].size(), 5u);

    auto b = run(base + " --out " + (dir_ / "b").string());
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "branch.csv"), slurp(dir_ / "b" / "branch.csv"));

    // re-run from the echoed config
    std::ofstream(dir_ / "cfg.json") << a.lines().at(0);
    auto c = run("--config " + (dir_ / "cfg.json").string() + " --out " + (dir_ / "c").string());
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(slurp(dir_ / "a" / "branch.csv"), slurp(dir_ / "c" / "branch.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "branch.csv").rfind("# schema: v1\nbranch,index,c,", 0), 0u);
}

TEST_F(Cli, ContinueEmptyRange) {
    EXPECT_EQ(run("continue --param c --range=1,1 --out " + dir_.string()).code, 2);
    EXPECT_EQ(run("continue --param q --range=0,1 --out " + dir_.string()).code, 2);
}

TEST_F(Cli, ContinueWithoutEquilibriaIsNumerical) {
    // x' = 1 has no equilibria anywhere
    std::ofstream(dir_ / "m.json") << R"({"expr_x": "1", "expr_y": "k", "params": {"k": 0.5}})";
    auto r = run("continue --model " + (dir_ / "m.json").string() + " --param k --range=0,1 --out " + dir_.string());
    EXPECT_EQ(r.code, 3);
    EXPECT_TRUE(json::parse(r.err).contains("message"));
}
