#pragma once

#include "fignet/model/figurenet.hpp"

namespace fignet {

// Comparator models. Both take the rendered image and the encoded question
// and emit a single answer logit.

// Shared strided-conv stem used by the baselines: four 3x3 stride-2
// convolutions taking image_size down to image_size/16 per side.
template <typename T>
struct ConvStem {
    std::vector<nn::Conv3x3<T>> convs;
    std::vector<nn::Mat<T>> acts;
    int image_side = 0;

    void configure(const std::string& prefix, int image_side_, const std::vector<int>& widths) {
        image_side = image_side_;
        if (image_side % 16 != 0) throw ConfigError("stem needs an image side divisible by 16");
        convs.resize(widths.size());
        int in = 3;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            convs[i].configure(prefix + "/conv" + std::to_string(i + 1), in, widths[i], 2);
            in = widths[i];
        }
    }
    void init(Rng& rng) {
        for (auto& c : convs) nn::he_init(c.w, rng, c.w.w.rows());
    }
    void collect(nn::ParamRefs<T>& out) {
        for (auto& c : convs) c.collect(out);
    }
    int grid() const { return image_side >> convs.size(); }

    nn::Mat<T> forward(const nn::Mat<T>& images, int batch) {
        acts.assign(convs.size(), {});
        const nn::Mat<T>* x = &images;
        int side = image_side;
        for (std::size_t i = 0; i < convs.size(); ++i) {
            acts[i] = nn::relu<T>(convs[i].forward(*x, batch, side, side));
            side = nn::Conv3x3<T>::out_dim(side, 2);
            x = &acts[i];
        }
        return acts.back();
    }
    void backward(const nn::Mat<T>& d_out, int batch) {
        nn::Mat<T> d = d_out;
        for (std::size_t i = convs.size(); i-- > 0;) {
            int side = image_side;
            for (std::size_t j = 0; j < i; ++j) side = nn::Conv3x3<T>::out_dim(side, 2);
            d = nn::relu_backward(acts[i], d);
            d = convs[i].backward(d, batch, side, side, i > 0);
        }
    }
};

// Appends each grid cell's row and column coordinates to its feature vector:
// cell i (1-indexed, row-major) gets (floor((i-1)/g), (i-1) mod g).
template <typename T>
nn::Mat<T> append_coordinates(const nn::Mat<T>& cells, int grid) {
    if (cells.rows() % (static_cast<Eigen::Index>(grid) * grid) != 0)
        throw ShapeError("cell count is not a multiple of the grid");
    nn::Mat<T> out(cells.rows(), cells.cols() + 2);
    out.leftCols(cells.cols()) = cells;
    for (Eigen::Index r = 0; r < cells.rows(); ++r) {
        const auto i = r % (static_cast<Eigen::Index>(grid) * grid);  // i-1 in 1-indexed terms
        out(r, cells.cols()) = static_cast<T>(i / grid);
        out(r, cells.cols() + 1) = static_cast<T>(i % grid);
    }
    return out;
}

// Relation network: a shared pairwise MLP over all ordered object pairs
// (self pairs included), averaged with 1/N^2 and read out by a second MLP.
template <typename T>
struct RelationNetwork {
    ConvStem<T> stem;
    QuestionEncoder<T> question;
    std::vector<nn::Linear<T>> g_mlp;
    std::vector<nn::Linear<T>> f_mlp;
    nn::Linear<T> out;
    int grid = 0, obj_dim = 0;

    struct SampleCache {
        nn::Mat<T> pairs;
        std::vector<nn::Mat<T>> g_act;
        nn::Mat<T> pooled;
    };
    std::vector<SampleCache> cache;
    std::vector<nn::Mat<T>> f_act;
    nn::Mat<T> pooled_batch, objects_cache;

    void configure(int image_side, int vocab, int question_hidden = 256) {
        stem.configure("rn/stem", image_side, {32, 64, 64, 64});
        grid = stem.grid();
        obj_dim = 64 + 2;
        question.configure("rn/question", vocab, 64, question_hidden);
        const int pair_in = 2 * obj_dim + question_hidden;
        g_mlp.resize(3);
        int in = pair_in;
        for (std::size_t i = 0; i < g_mlp.size(); ++i) {
            g_mlp[i].configure("rn/g" + std::to_string(i + 1), in, 256);
            in = 256;
        }
        f_mlp.resize(2);
        for (std::size_t i = 0; i < f_mlp.size(); ++i)
            f_mlp[i].configure("rn/f" + std::to_string(i + 1), 256, 256);
        out.configure("rn/out", 256, 1);
    }
    void init(Rng& rng) {
        stem.init(rng);
        question.init(rng);
        for (auto& l : g_mlp) nn::he_init(l.w, rng, l.w.w.rows());
        for (auto& l : f_mlp) nn::he_init(l.w, rng, l.w.w.rows());
        nn::glorot_init(out.w, rng, 256, 1);
    }
    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> refs;
        stem.collect(refs);
        question.collect(refs);
        for (auto& l : g_mlp) l.collect(refs);
        for (auto& l : f_mlp) l.collect(refs);
        out.collect(refs);
        return refs;
    }

    // (batch * grid^2) x (64+2) object set
    nn::Mat<T> extract_objects(const nn::Mat<T>& images, int batch) {
        objects_cache = append_coordinates(stem.forward(images, batch), grid);
        return objects_cache;
    }

    int last_n_obj = 0;

    // objects: (batch * n_obj) x obj_dim; q_enc: batch x question_hidden.
    // n_obj defaults to the stem grid; tests may pass smaller object sets.
    nn::Mat<T> forward_objects(const nn::Mat<T>& objects, const nn::Mat<T>& q_enc,
                               int n_obj_override = 0) {
        const int n_obj = last_n_obj = n_obj_override > 0 ? n_obj_override : grid * grid;
        const auto batch = static_cast<int>(objects.rows() / n_obj);
        cache.assign(static_cast<std::size_t>(batch), {});
        pooled_batch.resize(batch, 256);
        for (int bi = 0; bi < batch; ++bi) {
            auto& sc = cache[static_cast<std::size_t>(bi)];
            const auto obj = objects.middleRows(static_cast<Eigen::Index>(bi) * n_obj, n_obj);
            sc.pairs.resize(static_cast<Eigen::Index>(n_obj) * n_obj, 2 * obj_dim + q_enc.cols());
            for (int i = 0; i < n_obj; ++i)
                for (int j = 0; j < n_obj; ++j) {
                    const Eigen::Index r = static_cast<Eigen::Index>(i) * n_obj + j;
                    sc.pairs.block(r, 0, 1, obj_dim) = obj.row(i);
                    sc.pairs.block(r, obj_dim, 1, obj_dim) = obj.row(j);
                    sc.pairs.block(r, 2 * obj_dim, 1, q_enc.cols()) = q_enc.row(bi);
                }
            sc.g_act.assign(g_mlp.size(), {});
            const nn::Mat<T>* x = &sc.pairs;
            for (std::size_t k = 0; k < g_mlp.size(); ++k) {
                sc.g_act[k] = nn::relu<T>(g_mlp[k].forward(*x));
                x = &sc.g_act[k];
            }
            pooled_batch.row(bi) = x->colwise().sum() / static_cast<T>(n_obj * n_obj);
        }
        f_act.assign(f_mlp.size(), {});
        const nn::Mat<T>* x = &pooled_batch;
        for (std::size_t k = 0; k < f_mlp.size(); ++k) {
            f_act[k] = nn::relu<T>(f_mlp[k].forward(*x));
            x = &f_act[k];
        }
        return out.forward(*x);
    }

    nn::Mat<T> forward(const nn::Mat<T>& images, int batch,
                       const std::vector<std::vector<int>>& tokens) {
        return forward_objects(extract_objects(images, batch), question.forward(tokens));
    }

    // full backward through f, the pair MLP, the stem and the question encoder
    void backward(const nn::Mat<T>& dlogits, int batch) {
        nn::Mat<T> d = out.backward(f_act.back(), dlogits);
        for (std::size_t k = f_mlp.size(); k-- > 0;) {
            d = nn::relu_backward(f_act[k], d);
            d = f_mlp[k].backward(k == 0 ? pooled_batch : f_act[k - 1], d);
        }
        const int n_obj = last_n_obj;
        nn::Mat<T> d_objects = nn::Mat<T>::Zero(static_cast<Eigen::Index>(batch) * n_obj, obj_dim);
        nn::Mat<T> d_qenc = nn::Mat<T>::Zero(batch, cache[0].pairs.cols() - 2 * obj_dim);
        for (int bi = 0; bi < batch; ++bi) {
            auto& sc = cache[static_cast<std::size_t>(bi)];
            nn::Mat<T> dg = nn::Mat<T>::Zero(static_cast<Eigen::Index>(n_obj) * n_obj, 256);
            dg.rowwise() += d.row(bi) / static_cast<T>(n_obj * n_obj);
            for (std::size_t k = g_mlp.size(); k-- > 0;) {
                dg = nn::relu_backward(sc.g_act[k], dg);
                dg = g_mlp[k].backward(k == 0 ? sc.pairs : sc.g_act[k - 1], dg);
            }
            for (int i = 0; i < n_obj; ++i)
                for (int j = 0; j < n_obj; ++j) {
                    const Eigen::Index r = static_cast<Eigen::Index>(i) * n_obj + j;
                    d_objects.row(static_cast<Eigen::Index>(bi) * n_obj + i) +=
                        dg.block(r, 0, 1, obj_dim);
                    d_objects.row(static_cast<Eigen::Index>(bi) * n_obj + j) +=
                        dg.block(r, obj_dim, 1, obj_dim);
                    d_qenc.row(bi) += dg.block(r, 2 * obj_dim, 1, d_qenc.cols());
                }
        }
        question.backward(d_qenc);
        stem.backward(d_objects.leftCols(obj_dim - 2), batch);
    }
};

// CNN image embedding concatenated with the question encoding, read out by a
// small feed-forward stack.
template <typename T>
struct CnnLstm {
    ConvStem<T> stem;
    nn::Linear<T> img_fc;
    QuestionEncoder<T> question;
    std::vector<nn::Linear<T>> head;
    nn::Linear<T> out;
    int flat_dim = 0, img_emb = 512;

    nn::Mat<T> flat_cache, img_act, joint, head_in;
    std::vector<nn::Mat<T>> head_act;
    int batch_cache = 0;

    void configure(int image_side, int vocab, int question_hidden = 256) {
        stem.configure("cnn_lstm/stem", image_side, {16, 32, 64, 64});
        const int g = stem.grid();
        flat_dim = g * g * 64;
        img_fc.configure("cnn_lstm/img_fc", flat_dim, img_emb);
        question.configure("cnn_lstm/question", vocab, 64, question_hidden);
        head.resize(2);
        head[0].configure("cnn_lstm/fc1", img_emb + question_hidden, 512);
        head[1].configure("cnn_lstm/fc2", 512, 256);
        out.configure("cnn_lstm/out", 256, 1);
    }
    void init(Rng& rng) {
        stem.init(rng);
        nn::he_init(img_fc.w, rng, flat_dim);
        question.init(rng);
        for (auto& l : head) nn::he_init(l.w, rng, l.w.w.rows());
        nn::glorot_init(out.w, rng, 256, 1);
    }
    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> refs;
        stem.collect(refs);
        img_fc.collect(refs);
        question.collect(refs);
        for (auto& l : head) l.collect(refs);
        out.collect(refs);
        return refs;
    }

    nn::Mat<T> image_embedding(const nn::Mat<T>& images, int batch) {
        batch_cache = batch;
        const nn::Mat<T> fmap = stem.forward(images, batch);
        const int cells = stem.grid() * stem.grid();
        flat_cache.resize(batch, flat_dim);
        for (int bi = 0; bi < batch; ++bi)
            Eigen::Map<nn::Mat<T>>(flat_cache.row(bi).data(), cells, 64) =
                fmap.middleRows(static_cast<Eigen::Index>(bi) * cells, cells);
        img_act = nn::relu<T>(img_fc.forward(flat_cache));
        return img_act;
    }

    // emb_rows carries one image embedding per question (figures may repeat)
    nn::Mat<T> forward_joint(const nn::Mat<T>& emb_rows,
                             const std::vector<std::vector<int>>& tokens) {
        const nn::Mat<T> q = question.forward(tokens);
        joint.resize(emb_rows.rows(), emb_rows.cols() + q.cols());
        joint << emb_rows, q;
        head_act.assign(head.size(), {});
        const nn::Mat<T>* x = &joint;
        for (std::size_t k = 0; k < head.size(); ++k) {
            head_act[k] = nn::relu<T>(head[k].forward(*x));
            x = &head_act[k];
        }
        return out.forward(*x);
    }

    // gradient with respect to emb_rows; the question path is handled inside
    nn::Mat<T> backward_joint(const nn::Mat<T>& dlogits) {
        nn::Mat<T> d = out.backward(head_act.back(), dlogits);
        for (std::size_t k = head.size(); k-- > 0;) {
            d = nn::relu_backward(head_act[k], d);
            d = head[k].backward(k == 0 ? joint : head_act[k - 1], d);
        }
        question.backward(d.rightCols(d.cols() - img_emb));
        return d.leftCols(img_emb);
    }

    void backward_image(const nn::Mat<T>& d_emb) {
        nn::Mat<T> dflat = img_fc.backward(flat_cache, nn::relu_backward(img_act, d_emb));
        const int cells = stem.grid() * stem.grid();
        nn::Mat<T> dmap(static_cast<Eigen::Index>(batch_cache) * cells, 64);
        for (int bi = 0; bi < batch_cache; ++bi)
            dmap.middleRows(static_cast<Eigen::Index>(bi) * cells, cells) =
                Eigen::Map<const nn::Mat<T>>(dflat.row(bi).data(), cells, 64);
        stem.backward(dmap, batch_cache);
    }

    // one question per image
    nn::Mat<T> forward(const nn::Mat<T>& images, int batch,
                       const std::vector<std::vector<int>>& tokens) {
        return forward_joint(image_embedding(images, batch), tokens);
    }
};

}  // namespace fignet
