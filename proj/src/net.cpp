#include "inknet/net.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace inknet::tensornet {

SsmpKind parse_ssmp_kind(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "ssmp1") return SsmpKind::SSMP1;
    if (s == "ssmp2") return SsmpKind::SSMP2;
    if (s == "ssmp3") return SsmpKind::SSMP3;
    throw ConfigError("unknown SSMP strategy: " + name);
}

std::string ssmp_kind_name(SsmpKind k) {
    switch (k) {
        case SsmpKind::SSMP1: return "ssmp1";
        case SsmpKind::SSMP2: return "ssmp2";
        case SsmpKind::SSMP3: return "ssmp3";
    }
    return "?";
}

namespace {

std::vector<std::string> split_tokens(const std::string& compact) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : compact) {
        if (ch == '-' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_num(const std::string& tok, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad layer token: " + tok);
    }
}

}  // namespace

NetworkSpec NetworkSpec::parse(const std::string& compact, std::array<int, 3> input,
                               int categories) {
    NetworkSpec spec;
    spec.input = input;
    spec.categories = categories;
    const auto tokens = split_tokens(compact);
    if (tokens.empty()) throw ConfigError("empty network spec");

    for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
        const std::string tok = lower(tokens[ti]);
        if (tok == "input") continue;
        if (tok == "mp2") {
            spec.layers.push_back({LayerKind::MP2});
            continue;
        }
        if (tok.rfind("ssmp", 0) == 0 && tok.size() > 4 && (std::isdigit((unsigned char)tok[4]))) {
            LayerDesc L{LayerKind::SSMP};
            L.alpha = parse_num(tokens[ti], tok.substr(4));
            spec.layers.push_back(L);
            continue;
        }
        if (tok.rfind("drop", 0) == 0 && tok.size() > 4) {
            LayerDesc L{LayerKind::Dropout};
            L.p = parse_num(tokens[ti], tok.substr(4));
            spec.layers.push_back(L);
            continue;
        }
        if (tok.rfind("lrelu", 0) == 0) {
            LayerDesc L{LayerKind::LeakyRelu};
            L.slope = tok.size() > 5 ? parse_num(tokens[ti], tok.substr(5)) : kLeakySlope;
            spec.layers.push_back(L);
            continue;
        }
        if (tok == "linear" || tok == "output") {
            spec.layers.push_back({LayerKind::Linear});
            continue;
        }
        // "<channels>C<kernel>" convolution; a leaky ReLU follows unless the
        // next token supplies an explicit activation.
        const auto cpos = tok.find('c');
        if (cpos != std::string::npos && cpos > 0) {
            LayerDesc L{LayerKind::Conv};
            L.out_channels = int(parse_num(tokens[ti], tok.substr(0, cpos)));
            L.kernel = int(parse_num(tokens[ti], tok.substr(cpos + 1)));
            if (L.out_channels < 1) throw ConfigError("conv needs >= 1 channel: " + tokens[ti]);
            spec.layers.push_back(L);
            const bool explicit_act =
                ti + 1 < tokens.size() && lower(tokens[ti + 1]).rfind("lrelu", 0) == 0;
            if (!explicit_act) {
                LayerDesc act{LayerKind::LeakyRelu};
                act.slope = kLeakySlope;
                spec.layers.push_back(act);
            }
            continue;
        }
        throw ConfigError("unknown layer token: " + tokens[ti]);
    }
    spec.validate();
    return spec;
}

std::string NetworkSpec::compact() const {
    std::ostringstream out;
    bool first = true;
    auto sep = [&] {
        if (!first) out << "-";
        first = false;
    };
    auto num = [](double v) {
        std::ostringstream s;
        s << v;
        return s.str();
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& L = layers[i];
        switch (L.kind) {
            case LayerKind::Conv:
                sep();
                out << L.out_channels << "C" << L.kernel;
                // the auto-inserted activation is implied by the conv token
                if (i + 1 < layers.size() && layers[i + 1].kind == LayerKind::LeakyRelu &&
                    layers[i + 1].slope == kLeakySlope)
                    ++i;
                break;
            case LayerKind::MP2: sep(); out << "MP2"; break;
            case LayerKind::SSMP: sep(); out << "SSMP" << num(L.alpha); break;
            case LayerKind::LeakyRelu: sep(); out << "lrelu" << num(L.slope); break;
            case LayerKind::Dropout: sep(); out << "drop" << num(L.p); break;
            case LayerKind::Linear: sep(); out << "linear"; break;
        }
    }
    return out.str();
}

std::vector<std::array<int, 3>> NetworkSpec::shape_chain() const {
    if (input[0] < 1 || input[1] < 1 || input[2] < 1)
        throw ConfigError("network input shape must be positive");
    if (categories < 2) throw ConfigError("network needs >= 2 categories");
    if (layers.empty() || layers.back().kind != LayerKind::Linear)
        throw ConfigError("network spec must end with a linear layer");

    std::vector<std::array<int, 3>> chain{input};
    auto cur = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& L = layers[i];
        switch (L.kind) {
            case LayerKind::Conv: {
                if (L.kernel != 2 && L.kernel != 3)
                    throw ConfigError("conv kernel must be 2 or 3");
                if (cur[1] < L.kernel || cur[2] < L.kernel)
                    throw ConfigError("conv at layer " + std::to_string(i) +
                                      ": extent too small (" + std::to_string(cur[1]) + "x" +
                                      std::to_string(cur[2]) + ")");
                cur = {L.out_channels, cur[1] - L.kernel + 1, cur[2] - L.kernel + 1};
                break;
            }
            case LayerKind::MP2:
                if (cur[1] % 2 || cur[2] % 2)
                    throw ConfigError("mp2 at layer " + std::to_string(i) +
                                      ": extents must be even (" + std::to_string(cur[1]) + "x" +
                                      std::to_string(cur[2]) + ")");
                cur = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            case LayerKind::SSMP: {
                if (!(L.alpha > 1.0 && L.alpha <= 2.0))
                    throw ConfigError("ssmp alpha must be in (1,2]");
                if (cur[1] < 3 || cur[2] < 3)
                    throw ConfigError("ssmp at layer " + std::to_string(i) +
                                      ": extent must be >= 3");
                cur = {cur[0], int(std::floor(cur[1] / L.alpha + 0.5)),
                       int(std::floor(cur[2] / L.alpha + 0.5))};
                break;
            }
            case LayerKind::LeakyRelu:
                if (!(L.slope > 0.0 && L.slope < 1.0))
                    throw ConfigError("leaky relu slope must be in (0,1)");
                break;
            case LayerKind::Dropout:
                if (L.p < 0.0 || L.p >= 1.0) throw ConfigError("dropout ratio must be in [0,1)");
                break;
            case LayerKind::Linear:
                if (i + 1 != layers.size())
                    throw ConfigError("linear layer must be last");
                cur = {categories, 1, 1};
                break;
        }
        chain.push_back(cur);
    }
    return chain;
}

std::string NetworkSpec::preset(const std::string& name) {
    if (name == "baseline")
        return "32C3-MP2-64C3-96C3-MP2-128C3-160C3-MP2-192C3-224C3-MP2-256C3-linear";
    if (name == "ssmp")
        return "32C3-MP2-64C3-96C3-SSMP1.5-128C3-SSMP1.5-160C3-SSMP1.5-192C3-SSMP1.5-"
               "224C3-MP2-256C2-linear";
    if (name == "toy") return "10C3-MP2-16C3-SSMP1.5-24C3-SSMP1.5-32C3-linear";
    if (name == "gradcheck") return "8C3-MP2-12C3-SSMP1.5-linear";
    if (name == "demo") return "6C3-MP2-10C3-MP2-linear";
    throw ConfigError("unknown network preset: " + name);
}

std::array<int, 3> NetworkSpec::preset_input(const std::string& name, int channels) {
    int g = 0;
    if (name == "baseline") g = 106;
    else if (name == "ssmp") g = 96;
    else if (name == "toy") g = 24;
    else if (name == "gradcheck") g = 12;
    else if (name == "demo") g = 26;
    else throw ConfigError("unknown network preset: " + name);
    return {channels, g, g};
}

}  // namespace inknet::tensornet
