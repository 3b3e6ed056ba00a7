#include <doctest.h>

#include <set>

#include "fignet/nn/losses.hpp"
#include "test_helpers.hpp"

using namespace fignet;
using namespace fignet::testing;

TEST_CASE("conv backbone hits the published intermediate shapes") {
    ModelConfig cfg = ModelConfig::paper(100);
    ConvBackbone<float> bb;
    bb.configure("spectral", cfg, cfg.spectral_fc);
    Rng rng(3);
    bb.init(rng);
    const nn::MatF images = nn::MatF::Constant(128 * 128, 3, 0.5f);
    const nn::MatF rep = bb.forward(images, 1);
    CHECK(rep.cols() == 512);
    CHECK(bb.pooled_map.rows() == 64 * 64);
    CHECK(bb.pooled_map.cols() == 64);
    CHECK(bb.a4.rows() == 64 * 64);
    CHECK(bb.a4.cols() == 256);
    CHECK(bb.flat.cols() == 30 * 256);  // depthwise stage output flattened
    CHECK(bb.flat.cols() == 7680);

    ConvBackbone<float> order_bb;
    order_bb.configure("order", cfg, cfg.order_fc);
    order_bb.init(rng);
    CHECK(order_bb.forward(images, 1).cols() == 512);
}

TEST_CASE("backbone rejects wrong image shapes") {
    ModelConfig cfg = tiny_model_config();
    ConvBackbone<float> bb;
    bb.configure("spectral", cfg, cfg.spectral_fc);
    Rng rng(4);
    bb.init(rng);
    const nn::MatF bad = nn::MatF::Zero(10, 3);
    CHECK_THROWS_AS(bb.forward(bad, 1), ShapeError);
}

TEST_CASE("module forwards: shapes and row sums") {
    ModelConfig cfg = tiny_model_config();
    SlotModule<float> spectral;
    spectral.configure("spectral", cfg, true);
    Rng rng(5);
    spectral.init(rng);
    Rng data(6);
    const nn::MatF images = random_mat<float>(2 * 8 * 8, 3, data);
    const auto probs = spectral.forward(images, 2, nn::FeedMode::prob_feed);
    CHECK(probs.size() == 3);
    CHECK(probs[0].cols() == 5);  // palette 4 + stop
    for (const auto& o : probs)
        for (Eigen::Index r = 0; r < o.rows(); ++r)
            CHECK(std::abs(o.row(r).sum() - 1.0f) < 1e-5f);

    SlotModule<float> order;
    order.configure("order", cfg, false);
    order.init(rng);
    const auto oprobs = order.forward(images, 2, nn::FeedMode::prob_feed);
    CHECK(oprobs[0].cols() == 3);  // ranks 0..slots-1
}

TEST_CASE("figure representation: lengths, order and reconstruction") {
    SUBCASE("published width at K=100") {
        ModelConfig cfg = ModelConfig::paper(100);
        CHECK(cfg.figure_rep_dim() == 11 * 101 + 11 * 11);
        CHECK(cfg.figure_rep_dim() == 1232);
        CHECK(cfg.color_enc_dim() == 201);
        CHECK(cfg.answer_input_dim() == 1232 + 256 + 201);
        CHECK(cfg.answer_input_dim() == 1689);
    }
    SUBCASE("width formula at K=10") {
        ModelConfig cfg = ModelConfig::paper(10);
        CHECK(cfg.figure_rep_dim() == 11 * 11 + 121);
        CHECK(cfg.figure_rep_dim() == 242);
    }
    SUBCASE("flatten is slot-major, identity block first, and invertible") {
        Rng rng(7);
        std::vector<nn::MatD> sp(3), od(3);
        for (int t = 0; t < 3; ++t) {
            sp[static_cast<std::size_t>(t)] = random_mat<double>(2, 5, rng);
            od[static_cast<std::size_t>(t)] = random_mat<double>(2, 3, rng);
        }
        const nn::MatD rep = build_figure_representation(sp, od);
        CHECK(rep.cols() == 3 * 5 + 3 * 3);
        CHECK(rep(0, 0) == sp[0](0, 0));
        CHECK(rep(0, 5) == sp[1](0, 0));        // slot-major
        CHECK(rep(0, 15) == od[0](0, 0));       // identity block first
        const auto [sp2, od2] = split_figure_representation(rep, 3, 5, 3);
        for (int t = 0; t < 3; ++t) {
            CHECK(sp2[static_cast<std::size_t>(t)] == sp[static_cast<std::size_t>(t)]);
            CHECK(od2[static_cast<std::size_t>(t)] == od[static_cast<std::size_t>(t)]);
        }
    }
}

TEST_CASE("question color encoding") {
    SUBCASE("published width at K=100") {
        const auto enc = encode_question_colors<float>({{0, std::nullopt}}, 100);
        CHECK(enc.cols() == 201);
    }
    SUBCASE("absent second color uses the extra class") {
        const auto enc = encode_question_colors<float>({{0, std::nullopt}}, 3);
        nn::MatF expect(1, 7);
        expect << 1, 0, 0, 0, 0, 0, 1;
        CHECK(enc == expect);
    }
    SUBCASE("exactly two ones for any input") {
        Rng rng(8);
        for (int i = 0; i < 20; ++i) {
            const int k = 2 + static_cast<int>(rng.uniform_int(8));
            const int c1 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
            std::optional<int> c2;
            if (rng.bernoulli(0.5)) c2 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
            const auto enc = encode_question_colors<float>({{c1, c2}}, k);
            CHECK(enc.sum() == 2.0f);
            CHECK(enc.maxCoeff() == 1.0f);
        }
    }
    SUBCASE("out-of-range ids rejected") {
        CHECK_THROWS_AS(encode_question_colors<float>({{5, std::nullopt}}, 3), InputError);
        CHECK_THROWS_AS((encode_question_colors<float>({{0, 3}}, 3)), InputError);
    }
}

TEST_CASE("question encoder basics") {
    QuestionEncoder<float> enc;
    enc.configure("question", 12, 4, 6);
    Rng rng(9);
    enc.init(rng);
    const std::vector<std::vector<int>> toks = {{1, 2, 3}, {4, 5, 6, 7}};
    const nn::MatF a = enc.forward(toks);
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 6);
    const nn::MatF b = enc.forward(toks);
    CHECK(a == b);
    CHECK_THROWS_AS(enc.forward({{}}), InputError);
}

TEST_CASE("answer head: sigmoid range and the zero-parameter midpoint") {
    ModelConfig cfg = tiny_model_config();
    AnswerHead<float> head;
    head.configure("answer", cfg.answer_input_dim(), cfg.answer_fc);
    Rng data(10);

    SUBCASE("zero parameters give probability exactly 0.5") {
        const nn::MatF x = random_mat<float>(3, cfg.answer_input_dim(), data);
        const nn::MatF logits = head.forward(x);
        CHECK(logits.cwiseAbs().maxCoeff() == 0.0f);
        CHECK(nn::sigmoid(logits)(0, 0) == 0.5f);
    }
    SUBCASE("outputs stay strictly inside (0,1)") {
        Rng rng(11);
        head.init(rng);
        const nn::MatF x = random_mat<float>(8, cfg.answer_input_dim(), data);
        const nn::MatF p = nn::sigmoid(head.forward(x));
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            CHECK(p(i, 0) > 0.0f);
            CHECK(p(i, 0) < 1.0f);
        }
    }
}

TEST_CASE("parameter partition: every tensor in exactly one partition") {
    ModelConfig cfg = tiny_model_config();
    FigureNet<float> net;
    net.build(cfg, 10);
    net.init(1);
    std::set<const nn::Param<float>*> seen;
    std::size_t total = 0;
    for (const char* part : {"spectral", "order", "question", "answer"}) {
        for (auto* p : net.partition(part)) {
            CHECK(seen.insert(p).second);
            CHECK(p->name.rfind(std::string(part) + "/", 0) == 0);
            ++total;
        }
    }
    CHECK(net.all_params().size() == total);
}

TEST_CASE("ablation flags change only what they should") {
    ModelConfig cfg = tiny_model_config();
    cfg.conv_widths = {4, 4, 6, 16};  // square final width whose grid divides the pooled side

    auto shape_map = [&](const ModelConfig& c) {
        SlotModule<float> module;
        module.configure("spectral", c, true);
        nn::ParamRefs<float> refs;
        module.collect(refs);
        std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> shapes;
        for (auto* p : refs) shapes[p->name] = {p->w.rows(), p->w.cols()};
        return shapes;
    };
    const auto base = shape_map(cfg);

    ModelConfig swapped = cfg;
    swapped.ablation.replace_depthwise_3x3 = true;
    const auto alt = shape_map(swapped);

    for (const auto& [name, shape] : base) {
        if (name.find("/depthwise/") != std::string::npos) {
            CHECK(alt.count(name) == 0);  // stage swapped out
        } else {
            REQUIRE(alt.count(name) == 1);
            CHECK(alt.at(name) == shape);  // everything else unchanged
        }
    }
    CHECK(alt.count("spectral/alt_conv/w") == 1);

    SUBCASE("no_lstm replaces the decoder with a single one-go head") {
        ModelConfig ng = cfg;
        ng.ablation.no_lstm = true;
        SlotModule<float> module;
        module.configure("spectral", ng, true);
        Rng rng(12);
        module.init(rng);
        Rng data(13);
        const nn::MatF images = random_mat<float>(8 * 8, 3, data);
        const auto probs = module.forward(images, 1, nn::FeedMode::prob_feed);
        CHECK(probs.size() == 3);
        for (const auto& o : probs) CHECK(std::abs(o.row(0).sum() - 1.0f) < 1e-5f);
        nn::ParamRefs<float> refs;
        module.collect(refs);
        bool has_onego = false, has_lstm = false;
        for (auto* p : refs) {
            if (p->name.find("/onego/") != std::string::npos) has_onego = true;
            if (p->name.find("/lstm") != std::string::npos) has_lstm = true;
        }
        CHECK(has_onego);
        CHECK(!has_lstm);
    }
}

TEST_CASE("end-to-end gradient check: answer loss through a spectral parameter") {
    ModelConfig cfg = tiny_model_config();
    FigureNet<double> net;
    net.build(cfg, 9);
    net.init(42);

    Rng data(55);
    const int batch = 2;
    const nn::MatD images = random_mat<double>(batch * 8 * 8, 3, data);
    const std::vector<std::vector<int>> tokens = {{1, 2, 3, 4}, {5, 6, 7}};
    const std::vector<std::pair<int, std::optional<int>>> colors = {{1, 3}, {2, std::nullopt}};
    const std::vector<float> labels = {1.0f, 0.0f};

    auto compute = [&]() {
        for (auto* p : net.all_params()) p->zero_grad();
        const auto sp = net.spectral.forward(images, batch, nn::FeedMode::prob_feed);
        const auto od = net.order.forward(images, batch, nn::FeedMode::prob_feed);
        const nn::MatD rep = build_figure_representation(sp, od);
        const nn::MatD q_enc = net.question.forward(tokens);
        const nn::MatD c_enc = encode_question_colors<double>(colors, cfg.palette_size);
        nn::MatD x(batch, rep.cols() + q_enc.cols() + c_enc.cols());
        x << rep, q_enc, c_enc;
        const nn::MatD logits = net.answer.forward(x);
        nn::MatD dlogits;
        const double loss = nn::sigmoid_cross_entropy(logits, labels, &dlogits);
        const nn::MatD dx = net.answer.backward(dlogits);
        net.question.backward(dx.middleCols(rep.cols(), q_enc.cols()));
        const auto [dsp, dod] =
            split_figure_representation<double>(dx.leftCols(rep.cols()), cfg.slots,
                                                cfg.spectral_classes(), cfg.order_classes());
        net.spectral.backward(dsp, nn::FeedMode::prob_feed);
        net.order.backward(dod, nn::FeedMode::prob_feed);
        return loss;
    };

    // gradient flows into the scaling layer deep inside the spectral module
    compute();
    nn::ParamRefs<double> scaling{&net.spectral.backbone.scaling.p};
    CHECK(scaling[0]->g.cwiseAbs().maxCoeff() > 0.0);

    nn::ParamRefs<double> probe;
    probe.push_back(&net.spectral.backbone.scaling.p);
    probe.push_back(&net.spectral.backbone.conv1.w);
    probe.push_back(&net.spectral.backbone.depthwise.k);
    probe.push_back(&net.spectral.backbone.fc[0].w);
    probe.push_back(&net.spectral.decoder.first_input);
    probe.push_back(&net.spectral.decoder.lstm2.wh);
    probe.push_back(&net.order.backbone.scaling.p);
    probe.push_back(&net.order.decoder.head.w);
    probe.push_back(&net.question.embed);
    probe.push_back(&net.answer.fc[0].w);
    const auto r = gradcheck(probe, compute, 1e-5, 6);
    INFO("worst: ", r.worst_param, " analytic ", r.analytic, " numeric ", r.numeric);
    CHECK(r.max_rel_err < 1e-3);
}
