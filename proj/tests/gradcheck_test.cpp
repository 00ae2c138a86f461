// Finite-difference verification of every differentiable op. Checks run on
// the double instantiation of the kernels: central differences at step 1e-3
// carry ~1e-7 relative truncation error there, far below the 1e-4 gate,
// while float would drown the comparison in rounding noise.
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "glovesim/nn/ops.hpp"
#include "glovesim/nn/tensor.hpp"

using namespace glovesim;
using DTensor = nn::BasicTensor<double>;

namespace {

// Reduce an arbitrary op output to a scalar through a fixed random linear
// functional, so every output element influences the loss.
DTensor to_scalar(const DTensor& y, Rng& rng) {
    const int n = static_cast<int>(y.size());
    std::vector<double> w(static_cast<std::size_t>(n));
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    auto flat = nn::reshape(y, {1, n});
    auto wt = DTensor::from(std::move(w), {n, 1});
    auto b = DTensor::zeros({1});
    return nn::reshape(nn::linear(flat, wt, b), {1});
}

// Compares reverse-mode gradients of build() against central differences
// for every element of every input. build() must be deterministic across
// calls (ops that draw randomness must reseed internally).
void check_gradients(const std::function<DTensor()>& build, std::vector<DTensor> inputs,
                     double eps = 1e-3, double tol = 1e-4) {
    for (auto& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    auto loss = build();
    REQUIRE(loss.size() == 1);
    loss.backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& t : inputs) analytic.push_back(t.grad());

    nn::NoGradGuard off;
    for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
        auto& vals = inputs[ti].values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + eps;
            const double fp = build().item();
            vals[i] = keep - eps;
            const double fm = build().item();
            vals[i] = keep;
            const double fd = (fp - fm) / (2.0 * eps);
            const double an = analytic[ti][i];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            INFO("input ", ti, " element ", i, " analytic ", an, " fd ", fd);
            CHECK(rel < tol);
        }
    }
}

DTensor random_tensor(Rng& rng, std::initializer_list<int> dims, double lo = -1.0, double hi = 1.0) {
    return DTensor::uniform(rng, lo, hi, dims);
}

// Keeps relu inputs away from the kink, where central differences lie.
DTensor away_from_zero(Rng& rng, std::initializer_list<int> dims) {
    auto t = random_tensor(rng, dims);
    for (auto& v : t.values()) v += (v >= 0 ? 0.1 : -0.1);
    return t;
}

}  // namespace

TEST_CASE("add gradients, matching and broadcast shapes") {
    Rng rng(101);
    for (int rep = 0; rep < 3; ++rep) {
        const int b = 1 + int(rng.below(3)), t = 1 + int(rng.below(3)), d = 1 + int(rng.below(4));
        auto x = random_tensor(rng, {b, t, d});
        auto y = random_tensor(rng, {b, t, d});
        check_gradients([&]() { Rng f(7); return to_scalar(nn::add(x, y), f); }, {x, y});

        auto p = random_tensor(rng, {1, t, d});
        check_gradients([&]() { Rng f(8); return to_scalar(nn::add(x, p), f); }, {x, p});
    }
}

TEST_CASE("scale and relu gradients") {
    Rng rng(102);
    for (int rep = 0; rep < 4; ++rep) {
        auto x = away_from_zero(rng, {2, 1 + int(rng.below(5))});
        check_gradients([&]() { Rng f(9); return to_scalar(nn::scale(x, -1.7), f); }, {x});
        check_gradients([&]() { Rng f(10); return to_scalar(nn::relu(x), f); }, {x});
    }
}

TEST_CASE("dropout gradients with a frozen mask") {
    Rng rng(103);
    for (int rep = 0; rep < 3; ++rep) {
        auto x = random_tensor(rng, {3, 2 + int(rng.below(4))});
        const std::uint64_t mask_seed = rng.next_u64();
        check_gradients(
            [&]() {
                Rng mask_rng(mask_seed);
                Rng f(11);
                return to_scalar(nn::dropout(x, 0.4, true, mask_rng), f);
            },
            {x});
    }
}

TEST_CASE("linear gradients for rank-2 and rank-3 inputs") {
    Rng rng(104);
    for (int rep = 0; rep < 4; ++rep) {
        const int rows = 1 + int(rng.below(3));
        const int in = 1 + int(rng.below(4));
        const int out = 1 + int(rng.below(4));
        auto x = random_tensor(rng, {rows, in});
        auto w = random_tensor(rng, {in, out});
        auto b = random_tensor(rng, {out});
        check_gradients([&]() { Rng f(12); return to_scalar(nn::linear(x, w, b), f); }, {x, w, b});

        const int t = 1 + int(rng.below(3));
        auto x3 = random_tensor(rng, {rows, t, in});
        check_gradients([&]() { Rng f(13); return to_scalar(nn::linear(x3, w, b), f); }, {x3, w, b});
    }
}

TEST_CASE("conv1d gradients") {
    Rng rng(105);
    for (int rep = 0; rep < 4; ++rep) {
        const int batch = 1 + int(rng.below(2));
        const int cin = 1 + int(rng.below(2));
        const int cout = 1 + int(rng.below(3));
        const int k = 1 + int(rng.below(3));
        const int len = k + int(rng.below(4));
        auto x = random_tensor(rng, {batch, cin, len});
        auto kern = random_tensor(rng, {cout, cin, k});
        auto bias = random_tensor(rng, {cout});
        check_gradients([&]() { Rng f(14); return to_scalar(nn::conv1d(x, kern, bias), f); },
                        {x, kern, bias});
    }
}

TEST_CASE("softmax gradients") {
    Rng rng(106);
    for (int rep = 0; rep < 4; ++rep) {
        auto x = random_tensor(rng, {1 + int(rng.below(3)), 2 + int(rng.below(4))}, -3.0, 3.0);
        check_gradients([&]() { Rng f(15); return to_scalar(nn::softmax_lastdim(x), f); }, {x});
    }
}

TEST_CASE("layer_norm gradients for input and affine pair") {
    Rng rng(107);
    for (int rep = 0; rep < 4; ++rep) {
        const int d = 3 + int(rng.below(6));
        auto x = random_tensor(rng, {2, 2, d}, -2.0, 2.0);
        auto gamma = random_tensor(rng, {d}, 0.5, 1.5);
        auto beta = random_tensor(rng, {d});
        check_gradients([&]() { Rng f(16); return to_scalar(nn::layer_norm(x, gamma, beta), f); },
                        {x, gamma, beta});
    }
}

TEST_CASE("batched matmul gradients, both variants") {
    Rng rng(108);
    for (int rep = 0; rep < 3; ++rep) {
        const int nb = 1 + int(rng.below(3));
        const int m = 1 + int(rng.below(3));
        const int k = 1 + int(rng.below(3));
        const int n = 1 + int(rng.below(3));
        auto a = random_tensor(rng, {nb, m, k});
        auto b = random_tensor(rng, {nb, k, n});
        check_gradients([&]() { Rng f(17); return to_scalar(nn::batched_matmul(a, b), f); }, {a, b});

        auto bt = random_tensor(rng, {nb, n, k});
        check_gradients([&]() { Rng f(18); return to_scalar(nn::batched_matmul_nt(a, bt), f); }, {a, bt});
    }
}

TEST_CASE("split, merge, reshape and pooling gradients") {
    Rng rng(109);
    auto x = random_tensor(rng, {2, 3, 6});
    check_gradients([&]() { Rng f(19); return to_scalar(nn::split_heads(x, 3), f); }, {x});
    check_gradients([&]() { Rng f(20); return to_scalar(nn::merge_heads(x, 2), f); }, {x});
    check_gradients([&]() { Rng f(21); return to_scalar(nn::mean_over_dim1(x), f); }, {x});
    check_gradients([&]() { Rng f(22); return to_scalar(nn::reshape(x, {6, 6}), f); }, {x});
}

TEST_CASE("loss gradients") {
    Rng rng(110);
    for (int rep = 0; rep < 4; ++rep) {
        const int b = 1 + int(rng.below(3));
        const int c = 2 + int(rng.below(5));
        auto logits = random_tensor(rng, {b, c}, -2.0, 2.0);
        std::vector<int> labels;
        for (int i = 0; i < b; ++i) labels.push_back(int(rng.below(std::uint64_t(c))));
        check_gradients([&]() { return nn::cross_entropy(logits, labels); }, {logits});

        auto p = random_tensor(rng, {b, c});
        auto t = random_tensor(rng, {b, c});
        check_gradients([&]() { return nn::mse(p, t); }, {p, t});
    }
}

TEST_CASE("multi_head_attention gradients through the whole stack") {
    Rng rng(111);
    const int d = 4, heads = 2, b = 2, t = 3;
    auto x = random_tensor(rng, {b, t, d});
    nn::AttentionWeights<double> w{
        random_tensor(rng, {d, d}), random_tensor(rng, {d}),
        random_tensor(rng, {d, d}), random_tensor(rng, {d}),
        random_tensor(rng, {d, d}), random_tensor(rng, {d}),
        random_tensor(rng, {d, d}), random_tensor(rng, {d}),
    };
    check_gradients(
        [&]() {
            Rng f(23);
            return to_scalar(nn::multi_head_attention(x, w, heads), f);
        },
        {x, w.wq, w.bq, w.wk, w.bk, w.wv, w.bv, w.wo, w.bo});
}
