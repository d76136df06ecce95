#include "inknet/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "inknet/net.hpp"

namespace inknet::tensornet {

namespace {

constexpr double kEps = 1e-5;

double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    return std::fabs(analytic - numeric) / denom;
}

Tensor<double> random_tensor(int c, int h, int w, RngStream& rng, double scale = 1.0) {
    Tensor<double> t(c, h, w);
    for (auto& v : t.v) v = scale * rng.uniform(-1.0, 1.0);
    return t;
}

// Max relative error between analytic gradients and central differences of
// `loss` over every entry of `params`.
double check_grads(const std::function<double()>& loss,
                   const std::vector<std::pair<Tensor<double>*, const Tensor<double>*>>& params) {
    double worst = 0.0;
    for (auto& [var, grad] : params) {
        for (std::size_t i = 0; i < var->v.size(); ++i) {
            const double saved = var->v[i];
            var->v[i] = saved + kEps;
            const double up = loss();
            var->v[i] = saved - kEps;
            const double dn = loss();
            var->v[i] = saved;
            worst = std::max(worst, rel_err(grad->v[i], (up - dn) / (2.0 * kEps)));
        }
    }
    return worst;
}

// Weighted-sum head: L = sum(R .* y) turns a tensor output into a scalar with
// dL/dy = R.
Tensor<double> random_head(const Tensor<double>& like, RngStream& rng) {
    return random_tensor(like.c, like.h, like.w, rng);
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

}  // namespace

std::vector<GradCheckResult> gradcheck_layers(std::uint64_t seed) {
    std::vector<GradCheckResult> out;
    RngStream r = RngStream::keyed(seed, {0x6C});

    {  // conv 3x3
        Tensor<double> x = random_tensor(2, 5, 5, r);
        Tensor<double> w = random_tensor(3, 2, 9, r);
        Tensor<double> b = random_tensor(3, 1, 1, r);
        const Tensor<double> head = random_head(conv_forward(x, w, b, 3), r);
        Tensor<double> dx, dw, db;
        conv_backward(x, w, 3, head, dx, dw, db);
        auto loss = [&] { return dot(conv_forward(x, w, b, 3), head); };
        out.push_back({"conv3x3", check_grads(loss, {{&x, &dx}, {&w, &dw}, {&b, &db}})});
    }
    {  // conv 2x2
        Tensor<double> x = random_tensor(3, 4, 4, r);
        Tensor<double> w = random_tensor(2, 3, 4, r);
        Tensor<double> b = random_tensor(2, 1, 1, r);
        const Tensor<double> head = random_head(conv_forward(x, w, b, 2), r);
        Tensor<double> dx, dw, db;
        conv_backward(x, w, 2, head, dx, dw, db);
        auto loss = [&] { return dot(conv_forward(x, w, b, 2), head); };
        out.push_back({"conv2x2", check_grads(loss, {{&x, &dx}, {&w, &dw}, {&b, &db}})});
    }
    {  // leaky relu, inputs kept away from the kink
        Tensor<double> x = random_tensor(2, 4, 4, r);
        for (auto& v : x.v)
            if (std::fabs(v) < 0.05) v = v < 0 ? v - 0.05 : v + 0.05;
        const Tensor<double> head = random_head(x, r);
        const Tensor<double> dx = leaky_relu_backward(x, 0.333, head);
        auto loss = [&] { return dot(leaky_relu_forward(x, 0.333), head); };
        out.push_back({"leaky_relu", check_grads(loss, {{&x, &dx}})});
    }
    {  // dropout with a frozen mask
        Tensor<double> x = random_tensor(2, 4, 4, r);
        const Tensor<double> head = random_head(x, r);
        auto mask_rng = [&] { return RngStream::keyed(seed, {0xD0}); };
        std::vector<std::uint8_t> mask;
        {
            RngStream mr = mask_rng();
            dropout_forward(x, 0.3, mr, true, mask);
        }
        const Tensor<double> dx = dropout_backward(head, 0.3, mask);
        auto loss = [&] {
            RngStream mr = mask_rng();
            std::vector<std::uint8_t> m;
            return dot(dropout_forward(x, 0.3, mr, true, m), head);
        };
        out.push_back({"dropout", check_grads(loss, {{&x, &dx}})});
    }
    {  // mp2
        Tensor<double> x = random_tensor(2, 4, 4, r);
        std::vector<std::int32_t> argmax;
        const Tensor<double> y = mp2_forward(x, argmax);
        const Tensor<double> head = random_head(y, r);
        const Tensor<double> dx = mp2_backward(x, head, argmax);
        auto loss = [&] {
            std::vector<std::int32_t> am;
            return dot(mp2_forward(x, am), head);
        };
        out.push_back({"mp2", check_grads(loss, {{&x, &dx}})});
    }
    {  // ssmp with a frozen plan (7 is not divisible by the reduction)
        Tensor<double> x = random_tensor(2, 7, 7, r);
        SsmpStrategy strat;
        RngStream pr = RngStream::keyed(seed, {0x55});
        const StrideSeries rows = ssmp_plan(7, 1.5, strat, 0, pr);
        const StrideSeries cols = ssmp_plan(7, 1.5, strat, 0, pr);
        std::vector<std::int32_t> argmax;
        const Tensor<double> y = ssmp_forward(x, rows, cols, argmax);
        const Tensor<double> head = random_head(y, r);
        const Tensor<double> dx = ssmp_backward(x, head, argmax);
        auto loss = [&] {
            std::vector<std::int32_t> am;
            return dot(ssmp_forward(x, rows, cols, am), head);
        };
        out.push_back({"ssmp", check_grads(loss, {{&x, &dx}})});
    }
    {  // linear + softmax cross-entropy head
        Tensor<double> x = random_tensor(3, 2, 2, r);
        Tensor<double> w = random_tensor(4, 12, 1, r);
        Tensor<double> b = random_tensor(4, 1, 1, r);
        const int label = 2;
        std::vector<double> probs;
        Tensor<double> dlogits;
        softmax_xent(linear_forward(x, w, b), label, probs, &dlogits);
        Tensor<double> dx, dw, db;
        linear_backward(x, w, dlogits, dx, dw, db);
        auto loss = [&] {
            std::vector<double> p;
            return softmax_xent(linear_forward(x, w, b), label, p);
        };
        out.push_back(
            {"linear+softmax", check_grads(loss, {{&x, &dx}, {&w, &dw}, {&b, &db}})});
    }
    return out;
}

GradCheckResult gradcheck_whole_net(std::uint64_t seed) {
    const NetworkSpec spec =
        NetworkSpec::parse(NetworkSpec::preset("gradcheck"), {2, 12, 12}, 4);
    Network<double> net(spec);
    net.init_params(seed);

    RngStream r = RngStream::keyed(seed, {0x17});
    const Tensor<double> x = random_tensor(2, 12, 12, r);
    const int label = int(r.below(4));

    // Fixed context: keyed streams make every forward reuse the same plans.
    tensornet::SsmpStrategy strat;
    const auto ctx = ForwardCtx::train(seed, 0, 0, 0, strat);

    auto loss = [&] {
        std::vector<double> probs;
        return softmax_xent(net.forward(x, ctx), label, probs);
    };

    Trace<double> tr;
    std::vector<double> probs;
    Tensor<double> dlogits;
    softmax_xent(net.forward(x, ctx, &tr), label, probs, &dlogits);
    const Gradients<double> g = net.backward(tr, dlogits);

    std::vector<std::pair<Tensor<double>*, const Tensor<double>*>> params;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (net.weights[i].size() == 0) continue;
        params.push_back({&net.weights[i], &g.w[i]});
        params.push_back({&net.biases[i], &g.b[i]});
    }
    return {"whole-net", check_grads(loss, params)};
}

}  // namespace inknet::tensornet
