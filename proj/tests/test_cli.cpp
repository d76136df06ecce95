#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

const std::string cli = INKNET_CLI_PATH;
const std::string dir = "/tmp/inknet_cli_test";

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args).c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<double> parse_values(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    return out;
}

struct Setup {
    Setup() { std::system(("mkdir -p " + dir).c_str()); }
} setup;

}  // namespace

TEST_CASE("help exits 0 everywhere, usage errors exit 1") {
    CHECK(run("--help > /dev/null 2>&1") == 0);
    for (const char* sub : {"gen", "distort", "sig", "featurize", "train", "eval", "gradcheck",
                            "demo-rotation"})
        CHECK(run(std::string(sub) + " --help > /dev/null 2>&1") == 0);
    CHECK(run("--bogus > /dev/null 2>&1") == 1);
    CHECK(run("gen --no-such-flag > /dev/null 2>&1") == 1);
    CHECK(run("> /dev/null 2>&1") == 1);  // missing subcommand
}

TEST_CASE("data errors exit 2") {
    CHECK(run("distort --in /nonexistent.jsonl > /dev/null 2>&1") == 2);
    std::ofstream bad(dir + "/bad.jsonl");
    bad << "{\"strokes\":[[]]}\n";
    bad.close();
    CHECK(run("featurize --in " + dir + "/bad.jsonl --out " + dir + "/x.sigf 2>/dev/null") == 2);
    CHECK(run("train --set epochs=0 --data " + dir + "/bad.jsonl --out " + dir +
              "/t 2>/dev/null") == 2);
}

TEST_CASE("gen is reproducible byte for byte") {
    CHECK(run("gen --categories 4 --per-category 6 --jitter 1.5 --seed 9 --out " + dir +
              "/a.jsonl") == 0);
    CHECK(run("gen --categories 4 --per-category 6 --jitter 1.5 --seed 9 --out " + dir +
              "/b.jsonl") == 0);
    const std::string a = slurp(dir + "/a.jsonl");
    CHECK(a == slurp(dir + "/b.jsonl"));
    CHECK(std::count(a.begin(), a.end(), '\n') == 24);
}

TEST_CASE("sig prints the retrace pair identically") {
    CHECK(run("sig --m 4 --path \"0,0 1.5,2.5 3,3 1.5,2.5\" > " + dir + "/s1.txt") == 0);
    CHECK(run("sig --m 4 --path \"0,0 1.5,2.5\" > " + dir + "/s2.txt") == 0);
    const auto v1 = parse_values(slurp(dir + "/s1.txt"));
    const auto v2 = parse_values(slurp(dir + "/s2.txt"));
    REQUIRE(v1.size() == 31);
    REQUIRE(v2.size() == 31);
    for (std::size_t i = 0; i < 31; ++i) CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-12));

    // the time channel separates them
    CHECK(run("sig --m 4 --time --path \"0,0 1.5,2.5 3,3 1.5,2.5\" > " + dir + "/t1.txt") == 0);
    CHECK(run("sig --m 4 --time --path \"0,0 1.5,2.5\" > " + dir + "/t2.txt") == 0);
    const auto w1 = parse_values(slurp(dir + "/t1.txt"));
    const auto w2 = parse_values(slurp(dir + "/t2.txt"));
    REQUIRE(w1.size() == 121);
    REQUIRE(w2.size() == 121);
    double diff = 0.0;
    for (std::size_t i = 0; i < 121; ++i) diff = std::max(diff, std::fabs(w1[i] - w2[i]));
    CHECK(diff > 1e-6);
}

TEST_CASE("distort preview modes work") {
    CHECK(run("gen --categories 2 --per-category 2 --seed 3 --out " + dir + "/d.jsonl") == 0);
    CHECK(run("distort --in " + dir + "/d.jsonl --theta 0.3 --seed 5 --out " + dir +
              "/dist.jsonl") == 0);
    CHECK(std::count(slurp(dir + "/dist.jsonl").begin(), slurp(dir + "/dist.jsonl").end(),
                     '\n') == 4);
    CHECK(run("distort --in " + dir + "/d.jsonl --theta 0.3 --seed 5 --render pgm --out " + dir +
              "/pgm") == 0);
    const std::string pgm = slurp(dir + "/pgm_0000.pgm");
    CHECK(pgm.substr(0, 2) == "P5");
}

TEST_CASE("featurize-train-eval round trip on a tiny task") {
    CHECK(run("gen --categories 3 --per-category 10 --jitter 1 --seed 4 --out " + dir +
              "/tr.jsonl") == 0);
    CHECK(run("gen --categories 3 --per-category 4 --jitter 1 --seed 4 --instance-offset 10 "
              "--out " + dir + "/te.jsonl") == 0);
    const std::string sets =
        " --set net=6C3-MP2-8C3-SSMP1.5-linear --set grid=16 --set box=12 --set m=2"
        " --set epochs=2 --set batch=8 --set lr_initial=0.01 --set lr_final=0.005"
        " --set schedule=0.2,0.1 --set seed=11";
    CHECK(run("train --data " + dir + "/tr.jsonl" + sets + " --quiet --out " + dir + "/run") == 0);
    CHECK(slurp(dir + "/run/metrics.csv").rfind("epoch,loss", 0) == 0);
    CHECK(run("eval --checkpoint " + dir + "/run/checkpoint.bin --data " + dir +
              "/te.jsonl --k 1,3 --out " + dir + "/k.csv") == 0);
    const std::string ktab = slurp(dir + "/k.csv");
    CHECK(ktab.rfind("k,test_err_pct", 0) == 0);
    CHECK(std::count(ktab.begin(), ktab.end(), '\n') == 3);

    // feature dump path: featurize then train on the dump
    CHECK(run("featurize --in " + dir + "/tr.jsonl --mode sig2d --m 2 --grid 16 --box 12 "
              "--out " + dir + "/tr.sigf") == 0);
    CHECK(run("train --features " + dir + "/tr.sigf" + sets +
              " --set distortion=none --quiet --out " + dir + "/run2") == 0);

    // resume reproduces the uninterrupted checkpoint exactly
    const std::string pinned = " --set ssmp_switch_epoch=1";
    CHECK(run("train --data " + dir + "/tr.jsonl" + sets + pinned +
              " --set epochs=4 --set schedule=0.2x4 --quiet --out " + dir + "/full") == 0);
    CHECK(run("train --data " + dir + "/tr.jsonl" + sets + pinned +
              " --set schedule=0.2x2 --quiet --out " + dir + "/half") == 0);
    CHECK(run("train --data " + dir + "/tr.jsonl --resume " + dir + "/half/checkpoint.bin"
              " --set epochs=4 --set schedule=0.2x4 --quiet --out " + dir + "/resumed") == 0);
    CHECK(slurp(dir + "/resumed/checkpoint.bin") == slurp(dir + "/full/checkpoint.bin"));
}

TEST_CASE("gradcheck passes and is quiet about it") {
    CHECK(run("gradcheck --seed 1 > " + dir + "/gc.txt") == 0);
    const std::string out = slurp(dir + "/gc.txt");
    CHECK(out.find("whole-net") != std::string::npos);
    CHECK(out.find("PASS") != std::string::npos);
}
