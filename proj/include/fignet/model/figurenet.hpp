#pragma once

#include <optional>

#include "fignet/model/backbone.hpp"
#include "fignet/model/vocab.hpp"
#include "fignet/nn/decoder.hpp"
#include "fignet/nn/losses.hpp"

namespace fignet {

// One of the two slot modules (element identities or relative orders): a
// conv backbone feeding the recurrent slot decoder, or a single one-go
// linear head for the no_lstm ablation.
template <typename T>
struct SlotModule {
    int slots = 0, classes = 0;
    bool no_lstm = false;
    ConvBackbone<T> backbone;
    nn::SlotDecoder<T> decoder;
    nn::Linear<T> onego;
    nn::Mat<T> rep_cache;
    std::vector<nn::Mat<T>> onego_probs;

    void configure(const std::string& prefix, const ModelConfig& cfg, bool spectral) {
        slots = cfg.slots;
        classes = spectral ? cfg.spectral_classes() : cfg.order_classes();
        no_lstm = cfg.ablation.no_lstm;
        backbone.configure(prefix, cfg, spectral ? cfg.spectral_fc : cfg.order_fc);
        if (no_lstm)
            onego.configure(prefix + "/onego", cfg.rep_dim(spectral), slots * classes);
        else
            decoder.configure(prefix + "/decoder", slots, classes, cfg.rep_dim(spectral),
                              cfg.decoder_hidden, cfg.ablation.lstm_layers, cfg.decoder_init_both);
    }
    void init(Rng& rng) {
        backbone.init(rng);
        if (no_lstm)
            nn::fill_normal(onego.w.w, rng, 0.01);  // near-uniform slots, live gradients
        else
            decoder.init(rng);
    }
    void collect(nn::ParamRefs<T>& out) {
        backbone.collect(out);
        if (no_lstm)
            onego.collect(out);
        else
            decoder.collect(out);
    }

    // Per-slot class distributions for a batch of images.
    std::vector<nn::Mat<T>> forward(const nn::Mat<T>& images, int batch, nn::FeedMode mode,
                                    Rng* rng = nullptr) {
        rep_cache = backbone.forward(images, batch);
        if (!no_lstm) return decoder.forward(rep_cache, mode, rng);
        const nn::Mat<T> z = onego.forward(rep_cache);
        onego_probs.assign(static_cast<std::size_t>(slots), {});
        for (int t = 0; t < slots; ++t)
            onego_probs[static_cast<std::size_t>(t)] =
                nn::softmax_rows<T>(z.middleCols(static_cast<Eigen::Index>(t) * classes, classes));
        return onego_probs;
    }

    void backward(const std::vector<nn::Mat<T>>& dprobs, nn::FeedMode mode) {
        nn::Mat<T> d_rep;
        if (!no_lstm) {
            d_rep = decoder.backward(dprobs, mode);
        } else {
            nn::Mat<T> dz(rep_cache.rows(), static_cast<Eigen::Index>(slots) * classes);
            for (int t = 0; t < slots; ++t)
                dz.middleCols(static_cast<Eigen::Index>(t) * classes, classes) =
                    nn::softmax_rows_backward(onego_probs[static_cast<std::size_t>(t)],
                                              dprobs[static_cast<std::size_t>(t)]);
            d_rep = onego.backward(rep_cache, dz);
        }
        backbone.backward(d_rep);
    }
};

// Single-layer recurrent encoder over token embeddings; the question
// representation is the final hidden state.
template <typename T>
struct QuestionEncoder {
    nn::Param<T> embed;  // vocab x embed_dim
    nn::LstmCell<T> lstm;
    int hidden = 0, embed_dim = 0;

    struct SampleCache {
        std::vector<int> tokens;
        std::vector<typename nn::LstmCell<T>::Step> steps;
    };
    std::vector<SampleCache> cache;

    void configure(const std::string& prefix, int vocab, int embed_dim_, int hidden_) {
        embed_dim = embed_dim_;
        hidden = hidden_;
        embed.name = prefix + "/embed";
        embed.resize(vocab, embed_dim);
        lstm.configure(prefix + "/lstm", embed_dim, hidden);
    }
    void init(Rng& rng) {
        nn::fill_normal(embed.w, rng, 0.1);
        lstm.init(rng);
    }
    void collect(nn::ParamRefs<T>& out) {
        out.push_back(&embed);
        lstm.collect(out);
    }

    nn::Mat<T> forward(const std::vector<std::vector<int>>& token_batch) {
        const auto n = static_cast<Eigen::Index>(token_batch.size());
        nn::Mat<T> enc(n, hidden);
        cache.assign(token_batch.size(), {});
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& toks = token_batch[static_cast<std::size_t>(i)];
            if (toks.empty()) throw InputError("question encoder got an empty token sequence");
            auto& sc = cache[static_cast<std::size_t>(i)];
            sc.tokens = toks;
            nn::Mat<T> h = nn::Mat<T>::Zero(1, hidden), c = nn::Mat<T>::Zero(1, hidden);
            for (int tok : toks) {
                if (tok < 0 || tok >= embed.w.rows()) throw InputError("token id outside vocabulary");
                const nn::Mat<T> x = embed.w.row(tok);
                sc.steps.push_back(lstm.step(x, h, c));
                h = sc.steps.back().h;
                c = sc.steps.back().c;
            }
            enc.row(i) = h.row(0);
        }
        return enc;
    }

    void backward(const nn::Mat<T>& denc) {
        for (Eigen::Index i = 0; i < denc.rows(); ++i) {
            auto& sc = cache[static_cast<std::size_t>(i)];
            nn::Mat<T> dh = denc.row(i);
            nn::Mat<T> dc = nn::Mat<T>::Zero(1, hidden);
            for (std::size_t t = sc.steps.size(); t-- > 0;) {
                const nn::Mat<T> x = embed.w.row(sc.tokens[t]);
                const nn::Mat<T> hp = t == 0 ? nn::Mat<T>::Zero(1, hidden) : sc.steps[t - 1].h;
                const nn::Mat<T> cp = t == 0 ? nn::Mat<T>::Zero(1, hidden) : sc.steps[t - 1].c;
                auto g = lstm.backward(x, hp, cp, sc.steps[t], dh, dc);
                embed.g.row(sc.tokens[t]) += g.dx.row(0);
                dh = std::move(g.dh_prev);
                dc = std::move(g.dc_prev);
            }
        }
    }
};

// Final feed-forward answerer over [figure rep | question enc | color enc].
template <typename T>
struct AnswerHead {
    std::vector<nn::Linear<T>> fc;
    nn::Linear<T> out;
    nn::Mat<T> input_cache;
    std::vector<nn::Mat<T>> act;

    void configure(const std::string& prefix, int input, const std::vector<int>& widths) {
        fc.resize(widths.size());
        int in = input;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            fc[i].configure(prefix + "/fc" + std::to_string(i + 1), in, widths[i]);
            in = widths[i];
        }
        out.configure(prefix + "/out", in, 1);
    }
    void init(Rng& rng) {
        for (auto& f : fc) nn::he_init(f.w, rng, f.w.w.rows());
        nn::glorot_init(out.w, rng, out.w.w.rows(), 1);
    }
    void collect(nn::ParamRefs<T>& refs) {
        for (auto& f : fc) f.collect(refs);
        out.collect(refs);
    }

    // logits; the answer probability is sigmoid(logit)
    nn::Mat<T> forward(const nn::Mat<T>& x) {
        input_cache = x;
        act.assign(fc.size(), {});
        const nn::Mat<T>* cur = &input_cache;
        for (std::size_t i = 0; i < fc.size(); ++i) {
            act[i] = nn::relu<T>(fc[i].forward(*cur));
            cur = &act[i];
        }
        return out.forward(*cur);
    }
    nn::Mat<T> backward(const nn::Mat<T>& dlogits) {
        nn::Mat<T> d = out.backward(act.empty() ? input_cache : act.back(), dlogits);
        for (std::size_t i = fc.size(); i-- > 0;) {
            d = nn::relu_backward(act[i], d);
            d = fc[i].backward(i == 0 ? input_cache : act[i - 1], d);
        }
        return d;
    }
};

// The assembled model. Parameters are partitioned into
// {spectral, order, question, answer} so stages can freeze or train each
// part independently.
template <typename T>
struct FigureNet {
    ModelConfig cfg;
    SlotModule<T> spectral;
    SlotModule<T> order;
    QuestionEncoder<T> question;
    AnswerHead<T> answer;

    void build(const ModelConfig& cfg_, int vocab_size) {
        cfg = cfg_;
        cfg.validate();
        spectral.configure("spectral", cfg, true);
        order.configure("order", cfg, false);
        question.configure("question", vocab_size, cfg.question_embed, cfg.question_hidden);
        answer.configure("answer", cfg.answer_input_dim(), cfg.answer_fc);
    }

    void init(std::uint64_t seed) {
        // one independent stream per partition, so partitions are stable
        Rng r0(derive_seed(seed, 0)), r1(derive_seed(seed, 1)), r2(derive_seed(seed, 2)),
            r3(derive_seed(seed, 3));
        spectral.init(r0);
        order.init(r1);
        question.init(r2);
        answer.init(r3);
    }

    nn::ParamRefs<T> partition(const std::string& name) {
        nn::ParamRefs<T> refs;
        if (name == "spectral") spectral.collect(refs);
        else if (name == "order") order.collect(refs);
        else if (name == "question") question.collect(refs);
        else if (name == "answer") answer.collect(refs);
        else throw ConfigError("unknown partition: " + name);
        return refs;
    }
    nn::ParamRefs<T> all_params() {
        nn::ParamRefs<T> refs;
        for (const char* p : {"spectral", "order", "question", "answer"})
            for (auto* q : partition(p)) refs.push_back(q);
        return refs;
    }
};

// Flattens the two probability sequences slot-major (all classes of slot 0,
// then slot 1, ...), element-identity block first.
template <typename T>
nn::Mat<T> build_figure_representation(const std::vector<nn::Mat<T>>& spectral_probs,
                                       const std::vector<nn::Mat<T>>& order_probs) {
    if (spectral_probs.empty() || order_probs.empty()) throw ShapeError("empty probability sequence");
    const Eigen::Index n = spectral_probs[0].rows();
    const Eigen::Index c1 = spectral_probs[0].cols(), c2 = order_probs[0].cols();
    const auto t1 = static_cast<Eigen::Index>(spectral_probs.size());
    const auto t2 = static_cast<Eigen::Index>(order_probs.size());
    nn::Mat<T> rep(n, t1 * c1 + t2 * c2);
    for (Eigen::Index t = 0; t < t1; ++t) {
        if (spectral_probs[static_cast<std::size_t>(t)].rows() != n ||
            spectral_probs[static_cast<std::size_t>(t)].cols() != c1)
            throw ShapeError("inconsistent probability sequence shapes");
        rep.middleCols(t * c1, c1) = spectral_probs[static_cast<std::size_t>(t)];
    }
    for (Eigen::Index t = 0; t < t2; ++t) {
        if (order_probs[static_cast<std::size_t>(t)].rows() != n ||
            order_probs[static_cast<std::size_t>(t)].cols() != c2)
            throw ShapeError("inconsistent probability sequence shapes");
        rep.middleCols(t1 * c1 + t * c2, c2) = order_probs[static_cast<std::size_t>(t)];
    }
    return rep;
}

// Inverse of build_figure_representation.
template <typename T>
std::pair<std::vector<nn::Mat<T>>, std::vector<nn::Mat<T>>> split_figure_representation(
    const nn::Mat<T>& rep, int slots, int spectral_classes, int order_classes) {
    if (rep.cols() != static_cast<Eigen::Index>(slots) * (spectral_classes + order_classes))
        throw ShapeError("figure representation width mismatch");
    std::vector<nn::Mat<T>> sp(static_cast<std::size_t>(slots)), od(static_cast<std::size_t>(slots));
    for (int t = 0; t < slots; ++t) {
        sp[static_cast<std::size_t>(t)] =
            rep.middleCols(static_cast<Eigen::Index>(t) * spectral_classes, spectral_classes);
        od[static_cast<std::size_t>(t)] = rep.middleCols(
            static_cast<Eigen::Index>(slots) * spectral_classes +
                static_cast<Eigen::Index>(t) * order_classes,
            order_classes);
    }
    return {std::move(sp), std::move(od)};
}

// K-wide one-hot of the first color, then a (K+1)-wide one-hot of the second
// color with the extra class marking "no second color".
template <typename T>
nn::Mat<T> encode_question_colors(const std::vector<std::pair<int, std::optional<int>>>& colors,
                                  int palette_size) {
    nn::Mat<T> enc = nn::Mat<T>::Zero(static_cast<Eigen::Index>(colors.size()), 2 * palette_size + 1);
    for (Eigen::Index i = 0; i < enc.rows(); ++i) {
        const auto& [c1, c2] = colors[static_cast<std::size_t>(i)];
        if (c1 < 0 || c1 >= palette_size) throw InputError("first question color out of range");
        enc(i, c1) = T(1);
        if (c2) {
            if (*c2 < 0 || *c2 >= palette_size) throw InputError("second question color out of range");
            enc(i, palette_size + *c2) = T(1);
        } else {
            enc(i, 2 * palette_size) = T(1);
        }
    }
    return enc;
}

}  // namespace fignet
