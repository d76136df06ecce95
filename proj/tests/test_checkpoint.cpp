#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "inknet/checkpoint.hpp"
#include "inknet/rng.hpp"

using namespace inknet;
using namespace inknet::tensornet;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

CheckpointData sample_data() {
    CheckpointData d;
    d.manifest["cfg.seed"] = "42";
    d.manifest["netspec"] = "8C3-MP2-linear";
    d.manifest["epoch"] = "3";
    RngStream rng(1);
    Tensor<float> w(3, 4, 9);
    for (auto& v : w.v) v = float(rng.uniform(-1, 1));
    Tensor<float> b(3, 1, 1);
    d.tensors.emplace_back("layer0.w", w);
    d.tensors.emplace_back("layer0.b", b);
    return d;
}

}  // namespace

TEST_CASE("save-load-save produces identical bytes") {
    const std::string p1 = "/tmp/inknet_ckpt_a.bin", p2 = "/tmp/inknet_ckpt_b.bin";
    const CheckpointData d = sample_data();
    save_checkpoint(d, p1);
    const CheckpointData back = load_checkpoint(p1);
    save_checkpoint(back, p2);
    CHECK(slurp(p1) == slurp(p2));

    CHECK(back.manifest.at("cfg.seed") == "42");
    CHECK(back.manifest.at("epoch") == "3");
    REQUIRE(back.tensors.size() == 2);
    CHECK(back.tensors[0].first == "layer0.w");
    CHECK(back.tensors[0].second.v == d.tensors[0].second.v);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("truncated and corrupt files are rejected with the failing field") {
    const std::string path = "/tmp/inknet_ckpt_trunc.bin";
    save_checkpoint(sample_data(), path);
    const std::string bytes = slurp(path);

    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() - 40));
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"), ConfigError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "WRONGMAGIC------------------";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("manifest values must stay single-line") {
    CheckpointData d = sample_data();
    d.manifest["bad"] = "two\nlines";
    CHECK_THROWS_AS(save_checkpoint(d, "/tmp/inknet_ckpt_bad.bin"), ConfigError);
}
