#include "inknet/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "inknet/checkpoint.hpp"
#include "inknet/parallel.hpp"

namespace inknet::pipeline {

using ink::DataError;
using tensornet::ConfigError;
using tensornet::Network;
using tensornet::NetworkSpec;
using tensornet::Tensor;

DistortKind parse_distort_kind(const std::string& name) {
    if (name == "affine") return DistortKind::Affine;
    if (name == "rotation") return DistortKind::RotationOnly;
    if (name == "none") return DistortKind::None;
    throw ConfigError("unknown distortion kind: " + name);
}

std::string distort_kind_name(DistortKind k) {
    switch (k) {
        case DistortKind::Affine: return "affine";
        case DistortKind::RotationOnly: return "rotation";
        case DistortKind::None: return "none";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad integer '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad number '" + value + "'");
    }
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool is_preset(const std::string& name) {
    return name == "baseline" || name == "ssmp" || name == "toy" || name == "gradcheck" ||
           name == "demo";
}

}  // namespace

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str());
}

TrainConfig TrainConfig::from_text(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    if (key == "net") net = value;
    else if (key == "feature") feature = sigfeat::parse_feature_mode(value);
    else if (key == "m") m = int(parse_int(key, value));
    else if (key == "window") window = int(parse_int(key, value));
    else if (key == "grid") grid = int(parse_int(key, value));
    else if (key == "box") box = int(parse_int(key, value));
    else if (key == "schedule") schedule = value;
    else if (key == "schedule_mode") schedule_mode = value;
    else if (key == "plateau_patience") plateau_patience = int(parse_int(key, value));
    else if (key == "plateau_min_rel_improve") plateau_min_rel_improve = parse_double(key, value);
    else if (key == "distortion") distortion = parse_distort_kind(value);
    else if (key == "ssmp") ssmp = tensornet::parse_ssmp_kind(value);
    else if (key == "ssmp_switch_epoch") ssmp_switch_epoch = int(parse_int(key, value));
    else if (key == "epochs") epochs = int(parse_int(key, value));
    else if (key == "batch") batch = int(parse_int(key, value));
    else if (key == "momentum") momentum = parse_double(key, value);
    else if (key == "lr_initial") lr_initial = parse_double(key, value);
    else if (key == "lr_final") lr_final = parse_double(key, value);
    else if (key == "seed") seed = std::uint64_t(parse_int(key, value));
    else if (key == "threads") threads = int(parse_int(key, value));
    else throw ConfigError("unknown config key: " + key);
}

std::string TrainConfig::to_text() const {
    std::ostringstream out;
    out << "net=" << net << '\n'
        << "feature=" << sigfeat::feature_mode_name(feature) << '\n'
        << "m=" << m << '\n'
        << "window=" << window << '\n'
        << "grid=" << grid << '\n'
        << "box=" << box << '\n'
        << "schedule=" << schedule << '\n'
        << "schedule_mode=" << schedule_mode << '\n'
        << "plateau_patience=" << plateau_patience << '\n'
        << "plateau_min_rel_improve=" << fmt_double(plateau_min_rel_improve) << '\n'
        << "distortion=" << distort_kind_name(distortion) << '\n'
        << "ssmp=" << tensornet::ssmp_kind_name(ssmp) << '\n'
        << "ssmp_switch_epoch=" << ssmp_switch_epoch << '\n'
        << "epochs=" << epochs << '\n'
        << "batch=" << batch << '\n'
        << "momentum=" << fmt_double(momentum) << '\n'
        << "lr_initial=" << fmt_double(lr_initial) << '\n'
        << "lr_final=" << fmt_double(lr_final) << '\n'
        << "seed=" << seed << '\n'
        << "threads=" << threads << '\n';
    return out.str();
}

int TrainConfig::resolved_grid() const {
    if (grid > 0) return grid;
    if (net == "baseline") return 106;
    if (net == "ssmp") return 96;
    if (net == "toy") return 24;
    if (net == "gradcheck") return 12;
    if (net == "demo") return 26;
    return 64;
}

int TrainConfig::resolved_box() const {
    if (box > 0) return box;
    if (net == "baseline" || net == "ssmp") return 50;
    if (net == "toy") return 18;
    if (net == "demo") return 20;
    const int g = resolved_grid();
    return g >= 64 ? 50 : std::max(2, (3 * g) / 4);
}

std::string TrainConfig::net_compact() const {
    return is_preset(net) ? NetworkSpec::preset(net) : net;
}

distort::DropSchedule TrainConfig::drop_schedule() const {
    distort::DropSchedule sched;
    std::vector<double> thetas;
    std::vector<int> counts;
    bool any_count = false, all_counts = true;
    std::istringstream in(schedule);
    std::string entry;
    while (std::getline(in, entry, ',')) {
        entry = trim(entry);
        if (entry.empty()) continue;
        const std::size_t x = entry.find('x');
        if (x == std::string::npos) {
            thetas.push_back(parse_double("schedule", entry));
            counts.push_back(0);
            all_counts = false;
        } else {
            thetas.push_back(parse_double("schedule", entry.substr(0, x)));
            counts.push_back(int(parse_int("schedule", entry.substr(x + 1))));
            any_count = true;
        }
    }
    if (thetas.empty()) throw ConfigError("schedule: no stages in '" + schedule + "'");
    if (any_count && !all_counts)
        throw ConfigError("schedule: give epoch counts for all stages or none");
    if (any_count) {
        for (std::size_t i = 0; i < thetas.size(); ++i)
            sched.stages.push_back({thetas[i], counts[i]});
        if (sched.total_epochs() != epochs)
            throw ConfigError("schedule: stage epochs sum to " +
                              std::to_string(sched.total_epochs()) + ", config has " +
                              std::to_string(epochs));
    } else {
        sched = distort::DropSchedule::staged(thetas, epochs);
    }
    if (schedule_mode == "plateau") sched.mode = distort::DropSchedule::Mode::LossPlateau;
    else if (schedule_mode != "epochs")
        throw ConfigError("schedule_mode must be 'epochs' or 'plateau'");
    sched.patience = plateau_patience;
    sched.min_rel_improve = plateau_min_rel_improve;
    sched.validate();
    return sched;
}

tensornet::SsmpStrategy TrainConfig::ssmp_strategy() const {
    tensornet::SsmpStrategy s;
    s.kind = ssmp;
    if (ssmp_switch_epoch >= 0) {
        s.switch_epoch = ssmp_switch_epoch;
    } else {
        // default: switch when the distortion schedule enters its last stage
        const auto sched = drop_schedule();
        s.switch_epoch = sched.total_epochs() - sched.stages.back().epochs;
    }
    return s;
}

void TrainConfig::validate() {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
    if (!(lr_initial >= lr_final && lr_final > 0.0))
        throw ConfigError("need lr_initial >= lr_final > 0");
    if (epochs >= 3 && lr_final > lr_initial / 2.0)
        throw ConfigError("need lr_final <= lr_initial/2 so the rate never increases");
    if (m < 0 || m > 6) throw ConfigError("m must be in [0,6]");
    if (window < 1) throw ConfigError("window must be >= 1");
    const int g = resolved_grid(), b = resolved_box();
    if (g < 4) throw ConfigError("grid must be >= 4");
    if (b < 2 || b > g) throw ConfigError("need 2 <= box <= grid");
    if (ssmp_switch_epoch >= epochs)
        throw ConfigError("ssmp_switch_epoch must be < epochs");
    drop_schedule();
    ssmp_strategy();
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch >= cfg.epochs) throw ConfigError("lr_schedule: epoch out of range");
    if (epoch == 0) return cfg.lr_initial;
    const double half = cfg.lr_initial / 2.0;
    if (cfg.epochs <= 2 || epoch == 1) return half;
    const double ratio = std::pow(cfg.lr_final / half, 1.0 / double(cfg.epochs - 2));
    return half * std::pow(ratio, double(epoch - 1));
}

std::vector<double> MetricsLog::loss_history() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.loss);
    return out;
}

void MetricsLog::write_csv(std::ostream& out) const {
    out << "epoch,loss,train_err,theta,lr\n";
    for (const auto& r : rows)
        out << r.epoch << ',' << fmt_double(r.loss) << ',' << fmt_double(r.train_err) << ','
            << fmt_double(r.theta) << ',' << fmt_double(r.lr) << '\n';
}

void MetricsLog::write_k_table(std::ostream& out) const {
    out << "k,test_err_pct\n";
    char buf[32];
    for (const auto& [k, err] : k_test_err) {
        std::snprintf(buf, sizeof buf, "%.2f", err * 100.0);
        out << k << ',' << buf << '\n';
    }
}

// --- checkpoint assembly ----------------------------------------------------

void Checkpoint::save(const std::string& path) const {
    tensornet::CheckpointData data;
    std::istringstream cfg_lines(cfg.to_text());
    std::string line;
    while (std::getline(cfg_lines, line)) {
        const std::size_t eq = line.find('=');
        data.manifest["cfg." + line.substr(0, eq)] = line.substr(eq + 1);
    }
    data.manifest["categories"] = nlohmann::json(categories).dump();
    data.manifest["epoch"] = std::to_string(epoch);
    data.manifest["netspec"] = net.spec.compact();
    data.manifest["input"] = std::to_string(net.spec.input[0]) + "," +
                             std::to_string(net.spec.input[1]) + "," +
                             std::to_string(net.spec.input[2]);
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& r : log.rows)
        hist.push_back({r.epoch, r.loss, r.train_err, r.theta, r.lr});
    data.manifest["history"] = hist.dump();

    for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
        if (net.weights[i].size() == 0) continue;
        const std::string base = "layer" + std::to_string(i);
        data.tensors.emplace_back(base + ".w", net.weights[i]);
        data.tensors.emplace_back(base + ".b", net.biases[i]);
        data.tensors.emplace_back(base + ".vw", vel_w[i]);
        data.tensors.emplace_back(base + ".vb", vel_b[i]);
    }
    tensornet::save_checkpoint(data, path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    const tensornet::CheckpointData data = tensornet::load_checkpoint(path);
    Checkpoint ck;
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = data.manifest.find(key);
        if (it == data.manifest.end()) throw ConfigError("checkpoint: missing field " + key);
        return it->second;
    };
    for (const auto& [k, v] : data.manifest)
        if (k.rfind("cfg.", 0) == 0) ck.cfg.set(k.substr(4), v);
    ck.categories = nlohmann::json::parse(need("categories")).get<std::vector<std::string>>();
    ck.epoch = int(parse_int("epoch", need("epoch")));

    std::array<int, 3> input{};
    if (std::sscanf(need("input").c_str(), "%d,%d,%d", &input[0], &input[1], &input[2]) != 3)
        throw ConfigError("checkpoint: bad field input");
    NetworkSpec spec =
        NetworkSpec::parse(need("netspec"), input, int(ck.categories.size()));
    ck.net = Network<float>(spec);
    ck.vel_w.assign(spec.layers.size(), {});
    ck.vel_b.assign(spec.layers.size(), {});
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (ck.net.weights[i].size() == 0) continue;
        const std::string base = "layer" + std::to_string(i);
        for (const char* part : {".w", ".b", ".vw", ".vb"}) {
            const std::string name = base + part;
            const Tensor<float>* t = data.find(name);
            if (!t) throw ConfigError("checkpoint: missing tensor " + name);
            Tensor<float>& dst = part == std::string(".w")    ? ck.net.weights[i]
                                 : part == std::string(".b")  ? ck.net.biases[i]
                                 : part == std::string(".vw") ? ck.vel_w[i]
                                                              : ck.vel_b[i];
            if (part == std::string(".vw")) dst = Tensor<float>(ck.net.weights[i].c, ck.net.weights[i].h, ck.net.weights[i].w);
            if (part == std::string(".vb")) dst = Tensor<float>(ck.net.biases[i].c, ck.net.biases[i].h, ck.net.biases[i].w);
            if (!t->same_shape(dst))
                throw ConfigError("checkpoint: shape mismatch for " + name + ": file has " +
                                  t->shape_str() + ", spec needs " + dst.shape_str());
            dst = *t;
        }
    }
    for (const auto& row : nlohmann::json::parse(need("history")))
        ck.log.rows.push_back({row[0].get<int>(), row[1].get<double>(), row[2].get<double>(),
                               row[3].get<double>(), row[4].get<double>()});
    return ck;
}

// --- training ---------------------------------------------------------------

namespace {

struct SampleResult {
    float loss = 0.0f;
    int correct = 0;
    tensornet::Gradients<float> grads;
};

// Shared inner loop; make_input(i, epoch, theta) must be pure per sample.
Checkpoint train_core(
    TrainConfig cfg, std::size_t n_samples, const std::vector<int>& labels,
    const std::vector<std::string>& categories, std::array<int, 3> input,
    const std::function<Tensor<float>(std::size_t, int, double)>& make_input,
    const std::function<double(const Checkpoint&)>& val_metric, const TrainOptions& opts) {
    cfg.validate();
    if (n_samples == 0) throw DataError("training set is empty");
    if (categories.size() < 2) throw DataError("training set needs at least 2 categories");

    const NetworkSpec spec =
        NetworkSpec::parse(cfg.net_compact(), input, int(categories.size()));
    const auto sched = cfg.drop_schedule();
    const auto strategy = cfg.ssmp_strategy();

    Checkpoint ck;
    ck.cfg = cfg;
    ck.categories = categories;
    if (opts.resume) {
        ck = *opts.resume;
        ck.cfg = cfg;
        if (ck.categories != categories)
            throw ConfigError("resume: dataset categories do not match the checkpoint");
        if (ck.net.spec.compact() != spec.compact())
            throw ConfigError("resume: checkpoint spec '" + ck.net.spec.compact() +
                              "' does not match config '" + spec.compact() + "'");
    } else {
        ck.net = Network<float>(spec);
        ck.net.init_params(cfg.seed);
        ck.vel_w.assign(spec.layers.size(), {});
        ck.vel_b.assign(spec.layers.size(), {});
        for (std::size_t i = 0; i < spec.layers.size(); ++i) {
            if (ck.net.weights[i].size() == 0) continue;
            ck.vel_w[i] = Tensor<float>(ck.net.weights[i].c, ck.net.weights[i].h,
                                        ck.net.weights[i].w);
            ck.vel_b[i] = Tensor<float>(ck.net.biases[i].c, ck.net.biases[i].h,
                                        ck.net.biases[i].w);
        }
        ck.epoch = 0;
    }

    // True parameters live here; ck.net holds the lookahead point while
    // gradients are computed.
    std::vector<Tensor<float>> true_w = ck.net.weights, true_b = ck.net.biases;

    for (int epoch = ck.epoch; epoch < cfg.epochs; ++epoch) {
        const double theta = distort::schedule_theta(epoch, sched, ck.log.loss_history());
        const double lr = lr_schedule(epoch, cfg);

        std::vector<std::size_t> order(n_samples);
        std::iota(order.begin(), order.end(), 0);
        RngStream shuffle = RngStream::keyed(cfg.seed, {rngkey::kShuffle, std::uint64_t(epoch)});
        for (std::size_t i = n_samples - 1; i > 0; --i)
            std::swap(order[i], order[shuffle.below(i + 1)]);

        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;
        std::uint64_t step = 0;
        for (std::size_t bs = 0; bs < n_samples; bs += std::size_t(cfg.batch), ++step) {
            const std::size_t be = std::min(bs + std::size_t(cfg.batch), n_samples);
            const std::size_t bn = be - bs;

            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (ck.net.weights[i].size() == 0) continue;
                for (std::size_t j = 0; j < true_w[i].v.size(); ++j)
                    ck.net.weights[i].v[j] =
                        true_w[i].v[j] + float(cfg.momentum) * ck.vel_w[i].v[j];
                for (std::size_t j = 0; j < true_b[i].v.size(); ++j)
                    ck.net.biases[i].v[j] =
                        true_b[i].v[j] + float(cfg.momentum) * ck.vel_b[i].v[j];
            }

            std::vector<SampleResult> slots(bn);
            parallel_for(bn, cfg.threads, [&](std::size_t j) {
                const std::size_t si = order[bs + j];
                const Tensor<float> x = make_input(si, epoch, theta);
                const auto ctx = tensornet::ForwardCtx::train(cfg.seed, epoch, step,
                                                              std::uint64_t(si), strategy);
                tensornet::Trace<float> tr;
                const Tensor<float> logits = ck.net.forward(x, ctx, &tr);
                std::vector<float> probs;
                Tensor<float> dlogits;
                slots[j].loss = tensornet::softmax_xent(logits, labels[si], probs, &dlogits);
                slots[j].grads = ck.net.backward(tr, dlogits);
                const int pred =
                    int(std::max_element(probs.begin(), probs.end()) - probs.begin());
                slots[j].correct = pred == labels[si] ? 1 : 0;
            });

            double batch_loss = 0.0;
            for (const auto& s : slots) {
                batch_loss += s.loss;
                epoch_correct += std::size_t(s.correct);
            }
            epoch_loss += batch_loss;
            if (!std::isfinite(batch_loss))
                throw ConfigError("non-finite training loss at epoch " + std::to_string(epoch) +
                                  ", step " + std::to_string(step));

            const double inv = 1.0 / double(bn);
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (ck.net.weights[i].size() == 0) continue;
                Tensor<float> gw(ck.net.weights[i].c, ck.net.weights[i].h, ck.net.weights[i].w);
                Tensor<float> gb(ck.net.biases[i].c, ck.net.biases[i].h, ck.net.biases[i].w);
                for (const auto& s : slots) {
                    for (std::size_t j = 0; j < gw.v.size(); ++j) gw.v[j] += s.grads.w[i].v[j];
                    for (std::size_t j = 0; j < gb.v.size(); ++j) gb.v[j] += s.grads.b[i].v[j];
                }
                for (auto& v : gw.v) v = float(v * inv);
                for (auto& v : gb.v) v = float(v * inv);
                nesterov_step(true_w[i], ck.vel_w[i], gw, lr, cfg.momentum);
                nesterov_step(true_b[i], ck.vel_b[i], gb, lr, cfg.momentum);
            }
        }

        ck.net.weights = true_w;
        ck.net.biases = true_b;
        ck.epoch = epoch + 1;
        ck.log.rows.push_back({epoch, epoch_loss / double(n_samples),
                               1.0 - double(epoch_correct) / double(n_samples), theta, lr});
        if (!opts.quiet) {
            const auto& r = ck.log.rows.back();
            std::ostringstream msg;
            msg << "epoch " << r.epoch << "  loss " << r.loss << "  train_err "
                << r.train_err * 100 << "%  theta " << r.theta << "  lr " << r.lr;
            if (val_metric) msg << "  val_err " << val_metric(ck) * 100 << "%";
            std::cerr << msg.str() << "\n";
        }
        if (!opts.checkpoint_path.empty()) ck.save(opts.checkpoint_path);
    }
    return ck;
}

}  // namespace

Checkpoint train(const TrainConfig& cfg0, const ink::Dataset& train_set,
                 const ink::Dataset* val_set, const TrainOptions& opts) {
    TrainConfig cfg = cfg0;
    cfg.validate();
    const int G = cfg.resolved_grid(), H = cfg.resolved_box();

    std::vector<int> labels(train_set.items.size());
    for (std::size_t i = 0; i < train_set.items.size(); ++i) {
        const auto& it = train_set.items[i];
        if (!it.label) throw DataError("training item " + std::to_string(i) + " has no label");
        labels[i] = train_set.category_index(*it.label);
        if (labels[i] < 0) throw DataError("label not in inventory: " + *it.label);
    }

    // Normalization is distortion-independent; do it once.
    std::vector<ink::Character> normed(train_set.items.size());
    parallel_for(train_set.items.size(), cfg.threads, [&](std::size_t i) {
        normed[i] = ink::normalize(train_set.items[i], H, G);
    });

    const sigfeat::WindowSpec win{cfg.window};
    auto make_input = [&](std::size_t i, int epoch, double theta) {
        ink::Character ch = normed[i];
        if (theta > 0.0 && cfg.distortion != DistortKind::None) {
            RngStream rng = RngStream::keyed(
                cfg.seed, {rngkey::kDistort, std::uint64_t(epoch), std::uint64_t(i)});
            const auto sample = cfg.distortion == DistortKind::Affine
                                    ? distort::draw_distortion(theta, rng, cfg.kappa())
                                    : distort::draw_rotation_only(theta, rng);
            ch = distort::apply(ch, sample);
        }
        const sigfeat::FeatureMap fm =
            sigfeat::featurize_prenormalized(ch, cfg.feature, cfg.m, win, G);
        Tensor<float> x(fm.n, fm.g, fm.g);
        x.v = fm.values;
        return x;
    };

    std::function<double(const Checkpoint&)> val_metric;
    if (val_set && !val_set->items.empty())
        val_metric = [val_set, &cfg](const Checkpoint& ck) {
            return evaluate(ck, *val_set, {1}, cfg.threads).k_err[0].second;
        };

    return train_core(cfg, train_set.items.size(), labels, train_set.categories,
                      {cfg.feature_n(), G, G}, make_input, val_metric, opts);
}

Checkpoint train_on_features(const TrainConfig& cfg0, const sigfeat::FeatureSet& features,
                             const TrainOptions& opts) {
    TrainConfig cfg = cfg0;
    if (cfg.distortion != DistortKind::None)
        throw ConfigError("feature-dump training is static; set distortion=none");
    if (features.categories.empty()) throw DataError("feature dump has no categories");
    std::vector<int> labels(features.count());
    for (std::size_t i = 0; i < features.count(); ++i) {
        if (features.labels[i] < 0)
            throw DataError("feature record " + std::to_string(i) + " has no label");
        labels[i] = features.labels[i];
    }
    const std::size_t rec = std::size_t(features.n) * features.g * features.g;
    auto make_input = [&](std::size_t i, int, double) {
        Tensor<float> x(features.n, features.g, features.g);
        std::copy_n(features.record(i), rec, x.v.begin());
        return x;
    };
    return train_core(cfg, features.count(), labels, features.categories,
                      {features.n, features.g, features.g}, make_input, nullptr, opts);
}

// --- inference ---------------------------------------------------------------

namespace {

std::vector<float> predict_probs(const Checkpoint& ckpt, const Tensor<float>& x, int k,
                                 std::uint64_t sample_key) {
    const auto strategy = ckpt.cfg.ssmp_strategy();
    std::vector<float> mean;
    for (int r = 0; r < k; ++r) {
        const auto ctx = tensornet::ForwardCtx::eval(ckpt.cfg.seed, sample_key, std::uint64_t(r),
                                                     ckpt.epoch, strategy);
        const Tensor<float> logits = ckpt.net.forward(x, ctx);
        std::vector<float> probs;
        tensornet::softmax_xent(logits, 0, probs);
        if (mean.empty()) mean.assign(probs.size(), 0.0f);
        for (std::size_t i = 0; i < probs.size(); ++i) mean[i] += probs[i];
    }
    for (auto& v : mean) v /= float(k);
    return mean;
}

}  // namespace

std::vector<float> average_predict(const Checkpoint& ckpt, const sigfeat::FeatureMap& fm, int k,
                                   std::uint64_t sample_key) {
    if (k < 1) throw ConfigError("average_predict: k must be >= 1");
    Tensor<float> x(fm.n, fm.g, fm.g);
    x.v = fm.values;
    return predict_probs(ckpt, x, k, sample_key);
}

EvalResult evaluate(const Checkpoint& ckpt, const ink::Dataset& test_set,
                    const std::vector<int>& k_list, int threads) {
    if (test_set.items.empty()) throw DataError("test set is empty");
    if (k_list.empty()) throw ConfigError("evaluate: empty k list");
    for (int k : k_list)
        if (k < 1) throw ConfigError("evaluate: k must be >= 1");
    const int max_k = *std::max_element(k_list.begin(), k_list.end());
    const std::size_t n = test_set.items.size();
    const int ncat = int(ckpt.categories.size());
    const int G = ckpt.net.spec.input[1];

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& it = test_set.items[i];
        if (!it.label) throw DataError("test item " + std::to_string(i) + " has no label");
        auto pos = std::find(ckpt.categories.begin(), ckpt.categories.end(), *it.label);
        if (pos == ckpt.categories.end())
            throw DataError("test label not known to the model: " + *it.label);
        labels[i] = int(pos - ckpt.categories.begin());
    }

    // predictions[i][ki]: argmax of the running mean over the first k replicas
    std::vector<std::vector<int>> predictions(n, std::vector<int>(k_list.size(), 0));
    const auto strategy = ckpt.cfg.ssmp_strategy();
    const sigfeat::WindowSpec win{ckpt.cfg.window};
    parallel_for(n, threads ? threads : ckpt.cfg.threads, [&](std::size_t i) {
        const sigfeat::FeatureMap fm =
            sigfeat::featurize(test_set.items[i], ckpt.cfg.feature, ckpt.cfg.m, win, G,
                               ckpt.cfg.resolved_box());
        Tensor<float> x(fm.n, fm.g, fm.g);
        x.v = fm.values;
        std::vector<float> mean(std::size_t(ncat), 0.0f);
        for (int r = 0; r < max_k; ++r) {
            const auto ctx = tensornet::ForwardCtx::eval(ckpt.cfg.seed, std::uint64_t(i),
                                                         std::uint64_t(r), ckpt.epoch, strategy);
            const Tensor<float> logits = ckpt.net.forward(x, ctx);
            std::vector<float> probs;
            tensornet::softmax_xent(logits, 0, probs);
            for (int c = 0; c < ncat; ++c) mean[c] += probs[c];
            for (std::size_t ki = 0; ki < k_list.size(); ++ki)
                if (k_list[ki] == r + 1)
                    predictions[i][ki] =
                        int(std::max_element(mean.begin(), mean.end()) - mean.begin());
        }
    });

    EvalResult res;
    res.n = n;
    const std::size_t largest =
        std::max_element(k_list.begin(), k_list.end()) - k_list.begin();
    res.confusion.assign(ncat, std::vector<int>(ncat, 0));
    for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (predictions[i][ki] != labels[i]) ++wrong;
        res.k_err.emplace_back(k_list[ki], double(wrong) / double(n));
    }
    for (std::size_t i = 0; i < n; ++i) ++res.confusion[labels[i]][predictions[i][largest]];
    return res;
}

std::vector<std::pair<double, double>> demo_rotation_confusion(const std::vector<double>& thetas,
                                                               std::uint64_t seed, bool quiet) {
    if (thetas.empty()) throw ConfigError("demo: theta list is empty");
    const ink::Dataset train_set = ink::synth_dataset(2, 100, 1.5, seed, 0);
    const ink::Dataset clean_test = ink::synth_dataset(2, 100, 1.5, seed, 100);

    std::vector<std::pair<double, double>> out;
    for (double theta : thetas) {
        // Test on the same rotated distribution the classifier was trained
        // against; at theta = pi the two classes overlap almost completely.
        ink::Dataset test_set = clean_test;
        for (std::size_t i = 0; i < test_set.items.size(); ++i) {
            RngStream rng = RngStream::keyed(seed, {rngkey::kDistortEval, std::uint64_t(i)});
            test_set.items[i] =
                distort::apply(test_set.items[i], distort::draw_rotation_only(theta, rng));
        }
        TrainConfig cfg;
        cfg.net = "demo";
        cfg.feature = sigfeat::FeatureMode::Bitmap;
        cfg.distortion = DistortKind::RotationOnly;
        cfg.schedule = fmt_double(theta);
        cfg.ssmp = tensornet::SsmpKind::SSMP1;
        cfg.epochs = 6;
        cfg.batch = 32;
        cfg.seed = seed;
        TrainOptions opts;
        opts.quiet = quiet;
        const Checkpoint ck = train(cfg, train_set, nullptr, opts);
        const EvalResult res = evaluate(ck, test_set, {1});
        out.emplace_back(theta, 1.0 - res.k_err[0].second);
    }
    return out;
}

}  // namespace inknet::pipeline
