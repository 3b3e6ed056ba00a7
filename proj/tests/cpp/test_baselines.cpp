#include <doctest.h>

#include "fignet/baselines.hpp"
#include "fignet/nn/losses.hpp"
#include "test_helpers.hpp"

using namespace fignet;
using namespace fignet::testing;

TEST_CASE("object coordinates follow the row/column convention for all 64 cells") {
    Rng rng(31);
    const nn::Mat<double> cells = random_mat<double>(64, 64, rng);
    const auto objects = append_coordinates(cells, 8);
    CHECK(objects.rows() == 64);
    CHECK(objects.cols() == 66);
    for (int i = 1; i <= 64; ++i) {
        CHECK(objects(i - 1, 64) == static_cast<double>((i - 1) / 8));
        CHECK(objects(i - 1, 65) == static_cast<double>((i - 1) % 8));
    }
    // hand-evaluated corners
    CHECK(objects(0, 64) == 0.0);
    CHECK(objects(0, 65) == 0.0);
    CHECK(objects(8, 64) == 1.0);  // i = 9
    CHECK(objects(8, 65) == 0.0);
    CHECK(objects(63, 64) == 7.0);  // i = 64
    CHECK(objects(63, 65) == 7.0);
}

TEST_CASE("relation network stem produces the 8x8x64 object grid") {
    RelationNetwork<float> rn;
    rn.configure(128, 16);
    Rng rng(32);
    rn.init(rng);
    Rng data(33);
    const nn::MatF images = random_mat<float>(128 * 128, 3, data);
    const auto objects = rn.extract_objects(images, 1);
    CHECK(objects.rows() == 64);
    CHECK(objects.cols() == 66);
}

TEST_CASE("relation network is permutation-invariant over objects") {
    RelationNetwork<double> rn;
    rn.configure(128, 16);
    Rng rng(34);
    rn.init(rng);
    Rng data(35);
    const int n_obj = 64;
    nn::MatD objects = random_mat<double>(n_obj, 66, data, -1.0, 1.0);
    const nn::MatD q_enc = random_mat<double>(1, 256, data, -1.0, 1.0);

    const nn::MatD base = rn.forward_objects(objects, q_enc);
    Rng perm_rng(36);
    for (int trial = 0; trial < 3; ++trial) {
        nn::MatD shuffled = objects;
        for (int i = n_obj - 1; i > 0; --i) {
            const auto j = perm_rng.uniform_int(static_cast<std::uint64_t>(i) + 1);
            shuffled.row(i).swap(shuffled.row(static_cast<Eigen::Index>(j)));
        }
        const nn::MatD out = rn.forward_objects(shuffled, q_enc);
        CHECK(std::abs(out(0, 0) - base(0, 0)) < 1e-5);
    }
}

TEST_CASE("N=2 toy relation network matches an explicit 4-pair enumeration") {
    RelationNetwork<double> rn;
    rn.configure(128, 16);
    Rng rng(37);
    rn.init(rng);
    Rng data(38);
    const nn::MatD obj = random_mat<double>(2, 66, data, -1.0, 1.0);
    const nn::MatD q_enc = random_mat<double>(1, 256, data, -1.0, 1.0);

    // hand-rolled oracle over the 4 ordered pairs (self pairs included)
    auto g_of = [&](const nn::MatD& a, const nn::MatD& b) {
        nn::MatD x(1, 66 * 2 + 256);
        x << a, b, q_enc;
        for (auto& layer : rn.g_mlp) x = nn::relu<double>(layer.forward(x));
        return x;
    };
    nn::MatD pooled = nn::MatD::Zero(1, 256);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) pooled += g_of(obj.row(i), obj.row(j));
    pooled /= 4.0;
    nn::MatD f = pooled;
    for (auto& layer : rn.f_mlp) f = nn::relu<double>(layer.forward(f));
    const double expected = rn.out.forward(f)(0, 0);

    const nn::MatD actual = rn.forward_objects(obj, q_enc, 2);
    CHECK(actual(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("baseline outputs are probabilities and deterministic") {
    CnnLstm<float> cnn;
    cnn.configure(128, 20);
    Rng rng(39);
    cnn.init(rng);
    Rng data(40);
    const nn::MatF images = random_mat<float>(2 * 128 * 128, 3, data);
    const std::vector<std::vector<int>> toks = {{1, 2, 3}, {4, 5}};
    const nn::MatF a = nn::sigmoid(cnn.forward(images, 2, toks));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        CHECK(a(i, 0) > 0.0f);
        CHECK(a(i, 0) < 1.0f);
    }
    const nn::MatF b = nn::sigmoid(cnn.forward(images, 2, toks));
    CHECK(a == b);
}

TEST_CASE("gradient check: cnn+lstm baseline") {
    CnnLstm<double> cnn;
    cnn.configure(16, 10);  // tiny image keeps the stem cheap
    Rng rng(41);
    cnn.init(rng);
    Rng data(42);
    const nn::MatD images = random_mat<double>(2 * 16 * 16, 3, data);
    const std::vector<std::vector<int>> toks = {{1, 2}, {3, 4, 5}};
    const std::vector<float> labels = {1.0f, 0.0f};

    auto compute = [&]() {
        for (auto* p : cnn.params()) p->zero_grad();
        const nn::MatD logits = cnn.forward(images, 2, toks);
        nn::MatD dlogits;
        const double loss = nn::sigmoid_cross_entropy(logits, labels, &dlogits);
        const nn::MatD demb = cnn.backward_joint(dlogits);
        cnn.backward_image(demb);
        return loss;
    };
    const auto r = gradcheck(cnn.params(), compute, 1e-6, 4);
    INFO("worst: ", r.worst_param);
    CHECK(r.max_rel_err < 1e-3);
}

TEST_CASE("gradient check: relation network") {
    RelationNetwork<double> rn;
    rn.configure(16, 10);
    Rng rng(43);
    rn.init(rng);
    Rng data(44);
    const nn::MatD images = random_mat<double>(16 * 16, 3, data);
    const std::vector<std::vector<int>> toks = {{1, 2, 3}};
    const std::vector<float> labels = {1.0f};

    auto compute = [&]() {
        for (auto* p : rn.params()) p->zero_grad();
        const nn::MatD logits = rn.forward(images, 1, toks);
        nn::MatD dlogits;
        const double loss = nn::sigmoid_cross_entropy(logits, labels, &dlogits);
        rn.backward(dlogits, 1);
        return loss;
    };
    const auto r = gradcheck(rn.params(), compute, 1e-6, 3);
    INFO("worst: ", r.worst_param);
    CHECK(r.max_rel_err < 1e-3);
}
