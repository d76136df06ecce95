#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inknet/distort.hpp"
#include "inknet/featurize.hpp"
#include "inknet/ink.hpp"
#include "inknet/net.hpp"

namespace inknet::pipeline {

enum class DistortKind { Affine, RotationOnly, None };
DistortKind parse_distort_kind(const std::string& name);  // affine|rotation|none
std::string distort_kind_name(DistortKind k);

// Full training configuration. Mirrors the config-file keys one to one; any
// key can be overridden on the command line with --set key=value.
struct TrainConfig {
    std::string net = "toy";  // preset name or inline compact spec
    sigfeat::FeatureMode feature = sigfeat::FeatureMode::Sig2d;
    int m = 4;
    int window = 4;
    int grid = 0;  // 0: preset default (64 for inline specs)
    int box = 0;   // 0: preset default (50 for inline specs)
    std::string schedule = "0.3,0.2,0.1";  // "theta[xN],..." — counts default to an even split
    std::string schedule_mode = "epochs";  // epochs | plateau
    int plateau_patience = 3;
    double plateau_min_rel_improve = 0.005;
    DistortKind distortion = DistortKind::Affine;
    tensornet::SsmpKind ssmp = tensornet::SsmpKind::SSMP3;
    int ssmp_switch_epoch = -1;  // -1: start of the schedule's last stage
    int epochs = 70;
    int batch = 96;
    double momentum = 0.9;
    double lr_initial = 0.003;
    double lr_final = 1e-5;
    std::uint64_t seed = 42;
    int threads = 0;  // 0: hardware concurrency

    static TrainConfig from_file(const std::string& path);
    static TrainConfig from_text(const std::string& text);
    void set(const std::string& key, const std::string& value);
    std::string to_text() const;  // canonical key=value dump, newline separated

    // Derived pieces (validate resolves defaults first).
    void validate();
    int resolved_grid() const;
    int resolved_box() const;
    double kappa() const { return double(resolved_grid()) / 8.0; }
    distort::DropSchedule drop_schedule() const;
    tensornet::SsmpStrategy ssmp_strategy() const;
    std::string net_compact() const;
    int feature_n() const { return sigfeat::feature_channels(feature, m); }
};

// Learning-rate curve: lr_initial at epoch 0, halved at epoch 1, then
// geometric decay reaching lr_final at the final epoch.
double lr_schedule(int epoch, const TrainConfig& cfg);

// v <- mu*v - lr*g, w <- w + v, with g evaluated at the lookahead point
// w + mu*v (the training loop supplies such gradients).
template <typename T>
void nesterov_step(tensornet::Tensor<T>& w, tensornet::Tensor<T>& v,
                   const tensornet::Tensor<T>& g, double lr, double mu) {
    for (std::size_t i = 0; i < w.v.size(); ++i) {
        v.v[i] = T(mu) * v.v[i] - T(lr) * g.v[i];
        w.v[i] += v.v[i];
    }
}

struct EpochRow {
    int epoch;
    double loss;
    double train_err;
    double theta;
    double lr;
};

struct MetricsLog {
    std::vector<EpochRow> rows;
    std::vector<std::pair<int, double>> k_test_err;

    std::vector<double> loss_history() const;
    void write_csv(std::ostream& out) const;        // epoch,loss,train_err,theta,lr
    void write_k_table(std::ostream& out) const;    // k,test_err
};

// Trained state plus everything needed to resume or evaluate.
struct Checkpoint {
    TrainConfig cfg;
    std::vector<std::string> categories;
    tensornet::Network<float> net;
    std::vector<tensornet::Tensor<float>> vel_w, vel_b;
    int epoch = 0;  // epochs completed
    MetricsLog log;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

struct TrainOptions {
    std::string checkpoint_path;  // saved every epoch when non-empty
    std::optional<Checkpoint> resume;
    bool quiet = false;
};

Checkpoint train(const TrainConfig& cfg, const ink::Dataset& train_set,
                 const ink::Dataset* val_set = nullptr, const TrainOptions& opts = {});

// Trains directly on a fixed feature dump; distortion must be disabled.
Checkpoint train_on_features(const TrainConfig& cfg, const sigfeat::FeatureSet& features,
                             const TrainOptions& opts = {});

// Mean of k stochastic forward passes' probability outputs.
std::vector<float> average_predict(const Checkpoint& ckpt, const sigfeat::FeatureMap& fm, int k,
                                   std::uint64_t sample_key);

struct EvalResult {
    std::vector<std::pair<int, double>> k_err;     // error rate per requested k
    std::vector<std::vector<int>> confusion;       // rows: truth, cols: prediction (largest k)
    std::size_t n = 0;
};

EvalResult evaluate(const Checkpoint& ckpt, const ink::Dataset& test_set,
                    const std::vector<int>& k_list, int threads = 0);

// Trains the demo net on the hbar/vbar pair with rotation-only distortion at
// each degree; returns (theta, clean-test accuracy) pairs in input order.
std::vector<std::pair<double, double>> demo_rotation_confusion(const std::vector<double>& thetas,
                                                               std::uint64_t seed,
                                                               bool quiet = true);

}  // namespace inknet::pipeline
