#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inknet/distort.hpp"
#include "inknet/featurize.hpp"
#include "inknet/gradcheck.hpp"
#include "inknet/ink.hpp"
#include "inknet/pipeline.hpp"
#include "inknet/signature.hpp"

namespace {

using namespace inknet;

std::string fmt_shortest(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path == "-") return std::cout;
    file.open(path);
    if (!file) throw ink::DataError("cannot open " + path + " for writing");
    return file;
}

std::vector<std::vector<double>> parse_path_arg(const std::string& text) {
    std::vector<std::vector<double>> points;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        const std::size_t comma = tok.find(',');
        if (comma == std::string::npos)
            throw ink::DataError("bad path point '" + tok + "', expected x,y");
        try {
            points.push_back(
                {std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1))});
        } catch (const std::exception&) {
            throw ink::DataError("bad path point '" + tok + "'");
        }
    }
    if (points.empty()) throw ink::DataError("empty path");
    return points;
}

double parse_theta_token(const std::string& tok) {
    const double pi = 3.14159265358979323846;
    if (tok == "pi") return pi;
    if (tok.rfind("pi/", 0) == 0) return pi / std::stod(tok.substr(3));
    if (tok.rfind("pi*", 0) == 0) return pi * std::stod(tok.substr(3));
    return std::stod(tok);
}

std::vector<double> parse_theta_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(parse_theta_token(tok));
        } catch (const std::exception&) {
            throw ink::DataError("bad theta '" + tok + "'");
        }
    }
    if (out.empty()) throw ink::DataError("empty theta list");
    return out;
}

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        const std::size_t dots = tok.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoi(tok));
            } else {
                const int a = std::stoi(tok.substr(0, dots));
                const int b = std::stoi(tok.substr(dots + 2));
                for (int k = a; k <= b; ++k) out.push_back(k);
            }
        } catch (const std::exception&) {
            throw ink::DataError("bad k '" + tok + "'");
        }
    }
    if (out.empty()) throw ink::DataError("empty k list");
    return out;
}

void write_pgm(const sigfeat::FeatureMap& fm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ink::DataError("cannot open " + path + " for writing");
    out << "P5\n" << fm.g << " " << fm.g << "\n255\n";
    for (int y = 0; y < fm.g; ++y)
        for (int x = 0; x < fm.g; ++x)
            out.put(char(fm.at(0, y, x) > 0.0f ? 0 : 255));  // ink black on white
}

pipeline::TrainConfig load_config(const std::string& config_path,
                                  const std::vector<std::string>& sets) {
    pipeline::TrainConfig cfg;
    if (!config_path.empty()) cfg = pipeline::TrainConfig::from_file(config_path);
    for (const auto& kv : sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw tensornet::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"Online handwriting recognition with path-signature features,"
                 " curriculum distortion and stochastic pooling"};
    app.require_subcommand(1);

    // gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic polyline dataset");
    int gen_categories = 10, gen_per = 100, gen_offset = 0;
    double gen_jitter = 1.5;
    std::uint64_t gen_seed = 42;
    std::string gen_out = "-";
    gen->add_option("--categories", gen_categories, "Number of categories (>= 2)");
    gen->add_option("--per-category", gen_per, "Instances per category");
    gen->add_option("--jitter", gen_jitter, "Per-point Gaussian jitter, pixels");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--instance-offset", gen_offset,
                    "First instance index (disjoint splits share templates)");
    gen->add_option("--out", gen_out, "Output path or - for stdout");

    // distort -----------------------------------------------------------
    auto* dis = app.add_subcommand("distort", "Preview distorted characters");
    std::string dis_in, dis_out = "-", dis_render;
    double dis_theta = 0.3, dis_kappa = distort::kDefaultKappa;
    std::uint64_t dis_seed = 42;
    bool dis_rotation = false;
    int dis_grid = 64, dis_box = 50;
    dis->add_option("--in", dis_in, "Canonical dataset, - for stdin")->required();
    dis->add_option("--theta", dis_theta, "Distortion degree");
    dis->add_option("--seed", dis_seed, "RNG seed");
    dis->add_option("--kappa", dis_kappa, "Translation scale, pixels");
    dis->add_flag("--rotation-only", dis_rotation, "Draw only the rotation term");
    dis->add_option("--render", dis_render, "Set to 'pgm' for graymap previews");
    dis->add_option("--grid", dis_grid, "Render grid size");
    dis->add_option("--box", dis_box, "Render character box size");
    dis->add_option("--out", dis_out, "Output path (pgm: filename prefix)");

    // sig ---------------------------------------------------------------
    auto* sig = app.add_subcommand("sig", "Print the truncated signature of a path");
    std::string sig_path;
    int sig_m = 4;
    bool sig_time = false;
    sig->add_option("--path", sig_path, "Points as 'x,y x,y ...'")->required();
    sig->add_option("--m", sig_m, "Truncation depth");
    sig->add_flag("--time", sig_time, "Append the normalized time channel first");

    // featurize -----------------------------------------------------------
    auto* fea = app.add_subcommand("featurize", "Rasterize characters into a feature dump");
    std::string fea_in, fea_out, fea_mode = "sig2d";
    int fea_m = 4, fea_window = 4, fea_grid = 64, fea_box = 50;
    fea->add_option("--in", fea_in, "Canonical dataset, - for stdin")->required();
    fea->add_option("--mode", fea_mode, "bitmap | sig2d | sig3d");
    fea->add_option("--m", fea_m, "Truncation depth");
    fea->add_option("--window", fea_window, "Half-window in resampled points");
    fea->add_option("--grid", fea_grid, "Grid size G");
    fea->add_option("--box", fea_box, "Character box size H");
    fea->add_option("--out", fea_out, "Output .sigf path")->required();

    // train ---------------------------------------------------------------
    auto* trn = app.add_subcommand("train", "Train a network");
    std::string trn_data, trn_features, trn_val, trn_config, trn_out = "run", trn_resume;
    std::vector<std::string> trn_sets;
    bool trn_quiet = false;
    trn->add_option("--data", trn_data, "Canonical training dataset");
    trn->add_option("--features", trn_features, "SIGF feature dump (requires distortion=none)");
    trn->add_option("--val", trn_val, "Canonical validation dataset (logging only)");
    trn->add_option("--config", trn_config, "Config file (key = value lines)");
    trn->add_option("--set", trn_sets, "Override a config key, key=value")->take_all();
    trn->add_option("--out", trn_out, "Output directory");
    trn->add_option("--resume", trn_resume, "Resume from a checkpoint (config comes from it)");
    trn->add_flag("--quiet", trn_quiet, "No per-epoch progress lines");

    // eval ----------------------------------------------------------------
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint with k-run averaging");
    std::string evl_ckpt, evl_data, evl_k = "1", evl_out = "-", evl_confusion;
    int evl_threads = 0;
    evl->add_option("--checkpoint", evl_ckpt, "Checkpoint path")->required();
    evl->add_option("--data", evl_data, "Canonical test dataset")->required();
    evl->add_option("--k", evl_k, "Averaging runs, e.g. '1,5,10' or '1..10'");
    evl->add_option("--out", evl_out, "k-table CSV path or -");
    evl->add_option("--confusion", evl_confusion, "Confusion-matrix CSV path");
    evl->add_option("--threads", evl_threads, "Worker threads (0 = hardware)");

    // gradcheck -----------------------------------------------------------
    auto* grc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    std::string grc_spec = "toy";
    std::uint64_t grc_seed = 1;
    grc->add_option("--spec", grc_spec, "'toy' or an inline layer spec");
    grc->add_option("--seed", grc_seed, "RNG seed");

    // demo-rotation ---------------------------------------------------------
    auto* dem = app.add_subcommand("demo-rotation",
                                   "Orientation-confusion demo on the hbar/vbar pair");
    std::string dem_thetas = "0,pi/12,pi/3,pi", dem_out = "-";
    std::uint64_t dem_seed = 42;
    bool dem_quiet = false;
    dem->add_option("--thetas", dem_thetas, "Comma list; accepts pi, pi/N, pi*N, decimals");
    dem->add_option("--seed", dem_seed, "RNG seed");
    dem->add_option("--out", dem_out, "Output path or -");
    dem->add_flag("--quiet", dem_quiet, "No per-epoch progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (*gen) {
        const ink::Dataset d =
            ink::synth_dataset(gen_categories, gen_per, gen_jitter, gen_seed, gen_offset);
        ink::serialize_file(d, gen_out);
        return 0;
    }

    if (*dis) {
        const ink::Dataset d = ink::parse_canonical_file(dis_in);
        if (!dis_render.empty() && dis_render != "pgm")
            throw ink::DataError("unknown render mode: " + dis_render);
        ink::Dataset out_ds;
        out_ds.categories = d.categories;
        for (std::size_t i = 0; i < d.items.size(); ++i) {
            RngStream rng = RngStream::keyed(dis_seed, {rngkey::kDistort, 0, std::uint64_t(i)});
            const auto sample = dis_rotation
                                    ? distort::draw_rotation_only(dis_theta, rng)
                                    : distort::draw_distortion(dis_theta, rng, dis_kappa);
            if (dis_render == "pgm") {
                // render the way the trainer sees it: normalize, distort on the
                // grid, rasterize without re-centering
                const ink::Character normed = ink::normalize(d.items[i], dis_box, dis_grid);
                const ink::Character distorted = distort::apply(normed, sample);
                const auto fm = sigfeat::featurize_prenormalized(
                    distorted, sigfeat::FeatureMode::Bitmap, 0, {}, dis_grid);
                char name[32];
                std::snprintf(name, sizeof name, "_%04zu.pgm", i);
                write_pgm(fm, dis_out + name);
            } else {
                out_ds.items.push_back(distort::apply(d.items[i], sample));
            }
        }
        if (dis_render.empty()) ink::serialize_file(out_ds, dis_out);
        return 0;
    }

    if (*sig) {
        std::vector<std::vector<double>> pts = parse_path_arg(sig_path);
        if (sig_time) {
            const double denom = pts.size() > 1 ? double(pts.size() - 1) : 1.0;
            for (std::size_t i = 0; i < pts.size(); ++i)
                pts[i] = {double(i) / denom, pts[i][0], pts[i][1]};
        }
        const auto s = sigfeat::path_signature(pts, sig_m);
        for (double v : s.coeffs) std::cout << fmt_shortest(v) << "\n";
        return 0;
    }

    if (*fea) {
        const ink::Dataset d = ink::parse_canonical_file(fea_in);
        const auto mode = sigfeat::parse_feature_mode(fea_mode);
        sigfeat::FeatureSet fs;
        fs.categories = d.categories;
        for (const auto& item : d.items) {
            const auto fm =
                sigfeat::featurize(item, mode, fea_m, {fea_window}, fea_grid, fea_box);
            fs.append(fm, item.label ? d.category_index(*item.label) : -1);
        }
        sigfeat::write_sigf(fs, fea_out);
        return 0;
    }

    if (*trn) {
        namespace fs = std::filesystem;
        fs::create_directories(trn_out);
        pipeline::TrainOptions opts;
        opts.quiet = trn_quiet;
        opts.checkpoint_path = (fs::path(trn_out) / "checkpoint.bin").string();

        pipeline::TrainConfig cfg;
        if (!trn_resume.empty()) {
            // config comes from the checkpoint; --set still applies on top
            opts.resume = pipeline::Checkpoint::load(trn_resume);
            cfg = opts.resume->cfg;
            for (const auto& kv : trn_sets) {
                const std::size_t eq = kv.find('=');
                if (eq == std::string::npos)
                    throw tensornet::ConfigError("--set expects key=value, got '" + kv + "'");
                cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
        } else {
            cfg = load_config(trn_config, trn_sets);
        }

        pipeline::Checkpoint ck;
        if (!trn_features.empty()) {
            if (!trn_data.empty())
                throw tensornet::ConfigError("give --data or --features, not both");
            ck = pipeline::train_on_features(cfg, sigfeat::read_sigf(trn_features), opts);
        } else {
            if (trn_data.empty())
                throw tensornet::ConfigError("train needs --data or --features");
            const ink::Dataset data = ink::parse_canonical_file(trn_data);
            ink::Dataset val;
            if (!trn_val.empty()) val = ink::parse_canonical_file(trn_val);
            ck = pipeline::train(cfg, data, trn_val.empty() ? nullptr : &val, opts);
        }
        ck.save(opts.checkpoint_path);
        std::ofstream metrics(fs::path(trn_out) / "metrics.csv");
        ck.log.write_csv(metrics);
        return 0;
    }

    if (*evl) {
        const auto ck = pipeline::Checkpoint::load(evl_ckpt);
        const ink::Dataset data = ink::parse_canonical_file(evl_data);
        const auto res = pipeline::evaluate(ck, data, parse_k_list(evl_k), evl_threads);
        pipeline::MetricsLog log;
        log.k_test_err = res.k_err;
        std::ofstream f;
        log.write_k_table(open_out(f, evl_out));
        if (!evl_confusion.empty()) {
            std::ofstream cf(evl_confusion);
            if (!cf) throw ink::DataError("cannot open " + evl_confusion + " for writing");
            cf << "truth\\pred";
            for (const auto& c : ck.categories) cf << ',' << c;
            cf << '\n';
            for (std::size_t i = 0; i < res.confusion.size(); ++i) {
                cf << ck.categories[i];
                for (int v : res.confusion[i]) cf << ',' << v;
                cf << '\n';
            }
        }
        return 0;
    }

    if (*grc) {
        if (grc_spec != "toy")
            throw tensornet::ConfigError("gradcheck --spec supports 'toy' only");
        auto results = tensornet::gradcheck_layers(grc_seed);
        results.push_back(tensornet::gradcheck_whole_net(grc_seed));
        bool ok = true;
        std::printf("%-16s %s\n", "layer", "max_rel_err");
        for (const auto& r : results) {
            std::printf("%-16s %.3e\n", r.name.c_str(), r.max_rel_err);
            ok = ok && r.max_rel_err < 1e-4;
        }
        std::printf("%s\n", ok ? "PASS" : "FAIL");
        return ok ? 0 : 2;
    }

    if (*dem) {
        const auto report =
            pipeline::demo_rotation_confusion(parse_theta_list(dem_thetas), dem_seed, dem_quiet);
        std::ofstream f;
        std::ostream& out = open_out(f, dem_out);
        out << "theta,accuracy_pct\n";
        char buf[32];
        for (const auto& [theta, acc] : report) {
            std::snprintf(buf, sizeof buf, "%.2f", acc * 100.0);
            out << fmt_shortest(theta) << ',' << buf << '\n';
        }
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const inknet::ink::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const inknet::tensornet::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
