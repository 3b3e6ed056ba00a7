#include <doctest.h>

#include "fignet/nn/losses.hpp"
#include "test_helpers.hpp"

using namespace fignet;
using namespace fignet::testing;

TEST_CASE("scaling layer: identity, zero and loop oracle") {
    Rng rng(11);
    nn::Scaling<double> layer;
    layer.configure("s", 3, false);
    const nn::MatD fmap = random_mat<double>(16, 3, rng, -1.0, 1.0);  // 4x4x3

    layer.p.w.setOnes();
    CHECK(layer.forward(fmap) == fmap);

    layer.p.w.setZero();
    CHECK(layer.forward(fmap).cwiseAbs().maxCoeff() == 0.0);

    for (int c = 0; c < 3; ++c) layer.p.w(0, c) = rng.uniform(-2.0, 2.0);
    const nn::MatD out = layer.forward(fmap);
    double max_err = 0.0;
    for (Eigen::Index r = 0; r < fmap.rows(); ++r)
        for (int c = 0; c < 3; ++c)
            max_err = std::max(max_err, std::abs(out(r, c) - fmap(r, c) * layer.p.w(0, c)));
    CHECK(max_err < 1e-6);
}

TEST_CASE("scaling layer commutes with spatial permutations") {
    Rng rng(12);
    nn::Scaling<double> layer;
    layer.configure("s", 4, false);
    for (int c = 0; c < 4; ++c) layer.p.w(0, c) = rng.uniform(-2.0, 2.0);
    const nn::MatD fmap = random_mat<double>(9, 4, rng, -1.0, 1.0);
    std::vector<int> perm = {4, 2, 0, 8, 6, 1, 3, 7, 5};
    nn::MatD permuted(9, 4);
    for (int r = 0; r < 9; ++r) permuted.row(r) = fmap.row(perm[static_cast<std::size_t>(r)]);
    const nn::MatD a = layer.forward(permuted);
    const nn::MatD b = layer.forward(fmap);
    for (int r = 0; r < 9; ++r)
        CHECK(a.row(r) == b.row(perm[static_cast<std::size_t>(r)]));
}

TEST_CASE("scaling layer rejects mismatched parameter length") {
    nn::Scaling<double> layer;
    layer.configure("s", 4, false);
    const nn::MatD fmap = nn::MatD::Zero(8, 3);
    CHECK_THROWS_AS(layer.forward(fmap), ShapeError);
}

TEST_CASE("depthwise reduce: shape, constant map and hand-expanded sums") {
    Rng rng(13);
    nn::DepthwiseReduce<double> layer;

    SUBCASE("all-ones kernel on a constant 2x2 map") {
        layer.configure("d", 1, 4, false);
        layer.k.w.setOnes();
        nn::MatD fmap = nn::MatD::Constant(4, 2, 3.5);
        const nn::MatD out = layer.forward(fmap, 1);
        CHECK(out.rows() == 1);
        CHECK(out.cols() == 2);
        CHECK(out(0, 0) == doctest::Approx(14.0));
        CHECK(out(0, 1) == doctest::Approx(14.0));
    }

    SUBCASE("random 2x2x2 map against explicit 4-term sums") {
        layer.configure("d", 1, 4, false);
        for (int i = 0; i < 4; ++i) layer.k.w(0, i) = rng.uniform(-1.0, 1.0);
        const nn::MatD fmap = random_mat<double>(4, 2, rng, -1.0, 1.0);
        const nn::MatD out = layer.forward(fmap, 1);
        for (int c = 0; c < 2; ++c) {
            double expect = 0.0;
            for (int s = 0; s < 4; ++s) expect += layer.k.w(0, s) * fmap(s, c);
            CHECK(out(0, c) == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("paper-scale shape: 30 kernels on 64x64x256 gives 30x256") {
        layer.configure("d", 30, 64 * 64, false);
        nn::MatF big = nn::MatF::Zero(64 * 64, 256);
        nn::DepthwiseReduce<float> layer_f;
        layer_f.configure("d", 30, 64 * 64, false);
        const nn::MatF out = layer_f.forward(big, 1);
        CHECK(out.rows() == 1);
        CHECK(out.cols() == 30 * 256);
    }

    SUBCASE("dimension mismatch is rejected") {
        layer.configure("d", 2, 9, false);
        const nn::MatD fmap = nn::MatD::Zero(4, 2);
        CHECK_THROWS_AS(layer.forward(fmap, 1), ShapeError);
    }
}

TEST_CASE("depthwise reduce is linear in the feature map") {
    Rng rng(14);
    nn::DepthwiseReduce<double> layer;
    layer.configure("d", 3, 16, false);
    for (Eigen::Index i = 0; i < layer.k.w.size(); ++i)
        layer.k.w.data()[i] = rng.uniform(-1.0, 1.0);
    const nn::MatD x = random_mat<double>(16, 5, rng, -1.0, 1.0);
    const nn::MatD y = random_mat<double>(16, 5, rng, -1.0, 1.0);
    const double a = 1.7, b = -0.4;
    const nn::MatD lhs = layer.forward(a * x + b * y, 1);
    const nn::MatD rhs = a * layer.forward(x, 1) + b * layer.forward(y, 1);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("oracle sweep: both primitives match naive loops on 100 random shapes") {
    Rng rng(15);
    double max_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int h = 1 + static_cast<int>(rng.uniform_int(5));
        const int w = 1 + static_cast<int>(rng.uniform_int(5));
        const int c = 1 + static_cast<int>(rng.uniform_int(6));
        const int m = 1 + static_cast<int>(rng.uniform_int(4));
        const nn::MatD fmap = random_mat<double>(h * w, c, rng, -2.0, 2.0);

        nn::Scaling<double> scale;
        scale.configure("s", c, false);
        for (int i = 0; i < c; ++i) scale.p.w(0, i) = rng.uniform(-2.0, 2.0);
        const nn::MatD scaled = scale.forward(fmap);
        for (Eigen::Index r = 0; r < fmap.rows(); ++r)
            for (int ch = 0; ch < c; ++ch)
                max_err = std::max(max_err,
                                   std::abs(scaled(r, ch) - fmap(r, ch) * scale.p.w(0, ch)));

        nn::DepthwiseReduce<double> reduce;
        reduce.configure("d", m, h * w, false);
        for (Eigen::Index i = 0; i < reduce.k.w.size(); ++i)
            reduce.k.w.data()[i] = rng.uniform(-2.0, 2.0);
        const nn::MatD out = reduce.forward(fmap, 1);
        for (int mi = 0; mi < m; ++mi)
            for (int ch = 0; ch < c; ++ch) {
                double expect = 0.0;
                for (int s = 0; s < h * w; ++s) expect += reduce.k.w(mi, s) * fmap(s, ch);
                max_err = std::max(max_err, std::abs(out(0, mi * c + ch) - expect));
            }
    }
    CHECK(max_err < 1e-6);
}

TEST_CASE("decoder: shapes, row sums and determinism") {
    Rng rng(16);
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 11, 101, 16, 24, 2, false);
    Rng init(5);
    dec.init(init);
    const nn::MatD rep = random_mat<double>(3, 16, rng, -1.0, 1.0);
    const auto probs = dec.forward(rep, nn::FeedMode::prob_feed);
    CHECK(probs.size() == 11);
    CHECK(probs[0].rows() == 3);
    CHECK(probs[0].cols() == 101);
    for (const auto& o : probs)
        for (Eigen::Index r = 0; r < o.rows(); ++r)
            CHECK(std::abs(o.row(r).sum() - 1.0) < 1e-5);
    const auto probs2 = dec.forward(rep, nn::FeedMode::prob_feed);
    for (std::size_t t = 0; t < probs.size(); ++t) CHECK(probs[t] == probs2[t]);
}

TEST_CASE("decoder surfaces non-finite activations with the step index") {
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 3, 4, 6, 5, 2, false);
    Rng init(6);
    dec.init(init);
    dec.head.w.w(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const nn::MatD rep = nn::MatD::Ones(1, 6);
    CHECK_THROWS_WITH_AS(dec.forward(rep, nn::FeedMode::prob_feed), doctest::Contains("step 0"),
                         NumericError);
}

TEST_CASE("sampling variant: one-hot inputs, delta agreement, seed sensitivity") {
    Rng rng(17);
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 4, 6, 8, 8, 2, false);
    Rng init(7);
    dec.init(init);
    const nn::MatD rep = random_mat<double>(2, 8, rng, -1.0, 1.0);

    SUBCASE("argmax_eval feeds one-hot vectors") {
        dec.forward(rep, nn::FeedMode::argmax_eval);
        for (int t = 1; t < 4; ++t) {
            const auto& x = dec.cache.step[static_cast<std::size_t>(t)].x1;
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                CHECK(x.row(r).sum() == doctest::Approx(1.0));
                CHECK(x.row(r).maxCoeff() == doctest::Approx(1.0));
            }
        }
    }

    SUBCASE("a delta distribution makes the variant agree with prob feeding") {
        // force step outputs to a delta by a huge bias on one class
        dec.head.w.w.setZero();
        dec.head.b.w.setZero();
        dec.head.b.w(0, 2) = 50.0;
        const auto a = dec.forward(rep, nn::FeedMode::prob_feed);
        Rng sampler(1);
        const auto b = dec.forward(rep, nn::FeedMode::sample_train, &sampler);
        for (std::size_t t = 0; t < a.size(); ++t)
            CHECK((a[t] - b[t]).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("near-uniform outputs: sampled inputs vary across seeds, prob inputs do not") {
        dec.head.w.w.setZero();
        dec.head.b.w.setZero();  // exact uniform output at every step
        std::vector<nn::MatD> inputs;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng sampler(seed);
            dec.forward(rep, nn::FeedMode::sample_train, &sampler);
            inputs.push_back(dec.cache.step[1].x1);
        }
        int distinct = 0;
        for (std::size_t i = 1; i < inputs.size(); ++i)
            if (inputs[i] != inputs[0]) ++distinct;
        CHECK(distinct > 0);

        dec.forward(rep, nn::FeedMode::prob_feed);
        const nn::MatD first = dec.cache.step[1].x1;
        dec.forward(rep, nn::FeedMode::prob_feed);
        CHECK(dec.cache.step[1].x1 == first);
    }
}

TEST_CASE("gradient check: scaling layer") {
    Rng rng(21);
    nn::Scaling<double> layer;
    layer.configure("s", 5, false);
    for (int c = 0; c < 5; ++c) layer.p.w(0, c) = rng.uniform(0.5, 1.5);
    const nn::MatD x = random_mat<double>(12, 5, rng, -1.0, 1.0);
    const nn::MatD dy = random_mat<double>(12, 5, rng, -1.0, 1.0);

    nn::ParamRefs<double> params;
    layer.collect(params);
    auto compute = [&]() {
        for (auto* p : params) p->zero_grad();
        const nn::MatD y = layer.forward(x);
        layer.backward(x, dy);
        return (y.array() * dy.array()).sum();  // linear probe loss
    };
    const auto r = gradcheck(params, compute, 1e-5, 5);
    CHECK(r.max_rel_err < 1e-3);
}

TEST_CASE("gradient check: depthwise reduce") {
    Rng rng(22);
    nn::DepthwiseReduce<double> layer;
    layer.configure("d", 3, 16, false);
    for (Eigen::Index i = 0; i < layer.k.w.size(); ++i) layer.k.w.data()[i] = rng.uniform(-1.0, 1.0);
    const nn::MatD x = random_mat<double>(32, 4, rng, -1.0, 1.0);  // batch of 2 4x4x4 maps
    const nn::MatD dy = random_mat<double>(2, 12, rng, -1.0, 1.0);

    nn::ParamRefs<double> params;
    layer.collect(params);
    auto compute = [&]() {
        for (auto* p : params) p->zero_grad();
        const nn::MatD y = layer.forward(x, 2);
        layer.backward(x, dy, 2);
        return (y.array() * dy.array()).sum();
    };
    const auto r = gradcheck(params, compute, 1e-5, 8);
    CHECK(r.max_rel_err < 1e-3);
}

TEST_CASE("gradient check: probability-feeding decoder with cross-step paths") {
    Rng rng(23);
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 3, 5, 8, 8, 2, false);
    Rng init(9);
    dec.init(init);
    const nn::MatD rep = random_mat<double>(2, 8, rng, -1.0, 1.0);
    const std::vector<std::vector<int>> targets = {{1, 4, 0}, {3, 2, 4}};

    nn::ParamRefs<double> params;
    dec.collect(params);
    auto compute = [&]() {
        for (auto* p : params) p->zero_grad();
        const auto probs = dec.forward(rep, nn::FeedMode::prob_feed);
        std::vector<nn::MatD> dprobs;
        const double loss = nn::sequence_cross_entropy(probs, targets, &dprobs);
        dec.backward(dprobs, nn::FeedMode::prob_feed);
        return loss;
    };
    const auto r = gradcheck(params, compute, 1e-5, 8);
    INFO("worst: ", r.worst_param, " analytic ", r.analytic, " numeric ", r.numeric);
    CHECK(r.max_rel_err < 1e-3);
}

TEST_CASE("decoder: the input-feed path carries gradient for steps >= 2") {
    // loss applied only at the last step; in prob_feed mode the learned first
    // input still receives gradient through the feed chain o_0 -> x_1 -> o_1,
    // beyond the recurrent state path
    Rng rng(24);
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 3, 5, 8, 8, 2, false);
    Rng init(10);
    dec.init(init);
    const nn::MatD rep = random_mat<double>(1, 8, rng, -1.0, 1.0);

    auto last_step_grad = [&](nn::FeedMode mode) {
        nn::ParamRefs<double> params;
        dec.collect(params);
        for (auto* p : params) p->zero_grad();
        const auto probs = dec.forward(rep, mode);
        std::vector<nn::MatD> dprobs(3);
        for (int t = 0; t < 3; ++t) dprobs[static_cast<std::size_t>(t)] = nn::MatD::Zero(1, 5);
        dprobs[2](0, 1) = 1.0;
        dec.backward(dprobs, mode);
        return dec.first_input.g;
    };
    const nn::MatD g_prob = last_step_grad(nn::FeedMode::prob_feed);
    const nn::MatD g_argmax = last_step_grad(nn::FeedMode::argmax_eval);
    // both see the state path; only prob_feed adds the feed path
    CHECK((g_prob - g_argmax).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("gradient check: one-layer decoder variant") {
    Rng rng(25);
    nn::SlotDecoder<double> dec;
    dec.configure("dec", 3, 4, 6, 7, 1, false);
    Rng init(11);
    dec.init(init);
    const nn::MatD rep = random_mat<double>(2, 6, rng, -1.0, 1.0);
    const std::vector<std::vector<int>> targets = {{0, 3, 2}, {1, 1, 0}};

    nn::ParamRefs<double> params;
    dec.collect(params);
    auto compute = [&]() {
        for (auto* p : params) p->zero_grad();
        const auto probs = dec.forward(rep, nn::FeedMode::prob_feed);
        std::vector<nn::MatD> dprobs;
        const double loss = nn::sequence_cross_entropy(probs, targets, &dprobs);
        dec.backward(dprobs, nn::FeedMode::prob_feed);
        return loss;
    };
    CHECK(gradcheck(params, compute, 1e-5, 8).max_rel_err < 1e-3);
}
