#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wirelearn/layers.hpp"
#include "wirelearn/optim.hpp"
#include "wirelearn/rng.hpp"
#include "wirelearn/tensor.hpp"

namespace wirelearn {

struct ModelDims {
    int vocab_words = 10000;  // table gets one extra row for the reserved id 0
    int seq_len = 30;
    int embed = 8;
    int filters = 32;
    int kernel = 3;
    int lstm_units = 32;
    int fc1_units = 16;

    int conv_out_len() const { return seq_len - kernel + 1; }
    int pool_out_len() const { return conv_out_len() / 2; }
    int cut_width() const { return pool_out_len() * filters; }          // 448
    int compressed_width() const { return cut_width() / 4; }            // 112
};

/// Embedding -> Conv1d(valid) -> MaxPool1d(2) -> LSTM -> Dense(ReLU, L2)
/// -> Dense(sigmoid). 89,673 parameters at the default dims.
struct SentimentModel {
    ModelDims dims;
    Embedding emb;
    Conv1d conv;
    MaxPool1d pool;
    Lstm lstm;
    Dense fc1;
    Dense fc2;
    double fc1_l2 = 1e-4;  // weight decay added to fc1.dw once per update

    SentimentModel() = default;

    explicit SentimentModel(const ModelDims& d)
        : dims(d),
          emb(d.vocab_words + 1, d.embed),
          conv(d.kernel, d.embed, d.filters),
          lstm(d.filters, d.lstm_units),
          fc1(d.lstm_units, d.fc1_units, Act::Relu),
          fc2(d.fc1_units, 1, Act::Sigmoid) {}

    struct Cache {
        Embedding::Cache emb;
        Conv1d::Cache conv;
        MaxPool1d::Cache pool;
        Lstm::Cache lstm;
        Dense::Cache fc1;
        Dense::Cache fc2;
    };

    float forward(const std::vector<int32_t>& ids, Cache& cache) const {
        Tensor x = emb.forward(ids, cache.emb);
        x = conv.forward(x, cache.conv);
        x = pool.forward(x, cache.pool);
        Tensor h = lstm.forward(x, cache.lstm);
        h = fc1.forward(h, cache.fc1);
        h = fc2.forward(h, cache.fc2);
        return h.data[0];
    }

    /// Accumulates parameter gradients for one sample.
    void backward(float dloss_dpred, Cache& cache) {
        Tensor up({1});
        up.data[0] = dloss_dpred;
        Tensor d = fc2.backward(up, cache.fc2);
        d = fc1.backward(d, cache.fc1);
        d = lstm.backward(d, cache.lstm);
        d = pool.backward(d, cache.pool);
        d = conv.backward(d, cache.conv);
        emb.backward(d, cache.emb);
    }

    // Fixed parameter order; flatten/unflatten and checkpoints rely on it.
    std::vector<Tensor*> params() {
        return {&emb.table, &conv.w, &conv.b, &lstm.wx, &lstm.wh,
                &lstm.b,    &fc1.w,  &fc1.b,  &fc2.w,   &fc2.b};
    }
    std::vector<const Tensor*> params() const {
        return {&emb.table, &conv.w, &conv.b, &lstm.wx, &lstm.wh,
                &lstm.b,    &fc1.w,  &fc1.b,  &fc2.w,   &fc2.b};
    }
    std::vector<Tensor*> grads() {
        return {&emb.dtable, &conv.dw, &conv.db, &lstm.dwx, &lstm.dwh,
                &lstm.db,    &fc1.dw,  &fc1.db,  &fc2.dw,   &fc2.db};
    }

    void zero_grads() {
        for (Tensor* g : grads()) g->zero();
    }

    void scale_grads(float s) {
        for (Tensor* g : grads())
            for (float& v : g->data) v *= s;
    }

    /// Weight decay on the 16-unit dense layer; call once per optimizer step,
    /// after batch averaging.
    void apply_fc1_l2() {
        const float lambda = static_cast<float>(fc1_l2);
        for (size_t i = 0; i < fc1.w.size(); ++i) fc1.dw.data[i] += lambda * fc1.w.data[i];
    }

    size_t param_count() const {
        size_t n = 0;
        for (const Tensor* p : params()) n += p->size();
        return n;
    }

    size_t serialized_bytes_16bit() const { return param_count() * 2; }
};

/// Seeded build. Embedding is uniform +/-0.05, other weights fan-scaled,
/// biases zero except the LSTM forget gate (set to 1, the usual stabilizer).
inline SentimentModel build_model(uint64_t seed, const ModelDims& dims = {}) {
    SentimentModel m(dims);
    RngStream rng(seed, "init.model");
    uniform_init(m.emb.table, 0.05, rng);
    glorot_init(m.conv.w, dims.kernel * dims.embed, dims.filters, rng);
    glorot_init(m.lstm.wx, dims.filters, 4 * dims.lstm_units, rng);
    glorot_init(m.lstm.wh, dims.lstm_units, 4 * dims.lstm_units, rng);
    for (int j = 0; j < dims.lstm_units; ++j)
        m.lstm.b.data[static_cast<size_t>(dims.lstm_units) + j] = 1.0f;
    glorot_init(m.fc1.w, dims.lstm_units, dims.fc1_units, rng);
    glorot_init(m.fc2.w, dims.fc1_units, 1, rng);
    return m;
}

// ---------------------------------------------------------------------------
// Parameter transport helpers
// ---------------------------------------------------------------------------

inline Tensor flatten_tensors(const std::vector<const Tensor*>& ts) {
    size_t n = 0;
    for (const Tensor* t : ts) n += t->size();
    Tensor flat({static_cast<int>(n)});
    size_t off = 0;
    for (const Tensor* t : ts) {
        std::copy(t->data.begin(), t->data.end(), flat.data.begin() + off);
        off += t->size();
    }
    return flat;
}

inline void unflatten_tensors(const Tensor& flat, const std::vector<Tensor*>& ts) {
    size_t n = 0;
    for (Tensor* t : ts) n += t->size();
    if (flat.size() != n) throw std::invalid_argument("unflatten: length mismatch");
    size_t off = 0;
    for (Tensor* t : ts) {
        std::copy(flat.data.begin() + off, flat.data.begin() + off + t->size(),
                  t->data.begin());
        off += t->size();
    }
}

inline Tensor flatten_params(const SentimentModel& m) { return flatten_tensors(m.params()); }

inline void unflatten_params(SentimentModel& m, const Tensor& flat) {
    auto ps = m.params();
    unflatten_tensors(flat, ps);
}

// ---------------------------------------------------------------------------
// Split-learning view: user runs embedding/conv/pool plus a compression
// encoder; the server runs a decoder plus LSTM/dense layers. The cut payload
// is the encoder output (448 values compressed by four to 112).
// ---------------------------------------------------------------------------

struct CompressionCodec {
    Dense enc;  // cut_width -> cut_width/4, identity activation
    Dense dec;  // cut_width/4 -> cut_width

    CompressionCodec() = default;
    explicit CompressionCodec(const ModelDims& d)
        : enc(d.cut_width(), d.compressed_width(), Act::Linear),
          dec(d.compressed_width(), d.cut_width(), Act::Linear) {}
};

inline CompressionCodec build_codec(uint64_t seed, const ModelDims& dims = {}) {
    CompressionCodec c(dims);
    RngStream rng(seed, "init.codec");
    glorot_init(c.enc.w, dims.cut_width(), dims.compressed_width(), rng);
    glorot_init(c.dec.w, dims.compressed_width(), dims.cut_width(), rng);
    return c;
}

struct SplitModel {
    SentimentModel net;
    CompressionCodec codec;

    SplitModel() = default;
    SplitModel(SentimentModel n, CompressionCodec c)
        : net(std::move(n)), codec(std::move(c)) {}

    struct UserCache {
        Embedding::Cache emb;
        Conv1d::Cache conv;
        MaxPool1d::Cache pool;
        Dense::Cache enc;
    };

    struct ServerCache {
        Dense::Cache dec;
        Lstm::Cache lstm;
        Dense::Cache fc1;
        Dense::Cache fc2;
    };

    /// ids [seq_len] -> compressed cut activations [112]
    Tensor user_forward(const std::vector<int32_t>& ids, UserCache& cache) const {
        Tensor x = net.emb.forward(ids, cache.emb);
        x = net.conv.forward(x, cache.conv);
        x = net.pool.forward(x, cache.pool);
        // row-major [14,32] flattens to the 448-wide encoder input
        Tensor flat({static_cast<int>(x.size())}, x.data);
        return codec.enc.forward(flat, cache.enc);
    }

    /// received activations [112] -> prediction in (0,1)
    float server_forward(const Tensor& s_hat, ServerCache& cache) const {
        Tensor x = codec.dec.forward(s_hat, cache.dec);
        Tensor seq({net.dims.pool_out_len(), net.dims.filters}, x.data);
        Tensor h = net.lstm.forward(seq, cache.lstm);
        h = net.fc1.forward(h, cache.fc1);
        h = net.fc2.forward(h, cache.fc2);
        return h.data[0];
    }

    /// Accumulates server-side grads, returns the gradient at the received
    /// activations (what goes back over the feedback channel).
    Tensor server_backward(float dloss_dpred, ServerCache& cache) {
        Tensor up({1});
        up.data[0] = dloss_dpred;
        Tensor d = net.fc2.backward(up, cache.fc2);
        d = net.fc1.backward(d, cache.fc1);
        d = net.lstm.backward(d, cache.lstm);
        Tensor flat({static_cast<int>(d.size())}, d.data);
        return codec.dec.backward(flat, cache.dec);
    }

    /// Backpropagates a received activation gradient through the user stack.
    void user_backward(const Tensor& ds, UserCache& cache) {
        Tensor d = codec.enc.backward(ds, cache.enc);
        Tensor seq({net.dims.pool_out_len(), net.dims.filters}, d.data);
        d = net.pool.backward(seq, cache.pool);
        d = net.conv.backward(d, cache.conv);
        net.emb.backward(d, cache.emb);
    }

    std::vector<Tensor*> user_params() {
        return {&net.emb.table, &net.conv.w, &net.conv.b, &codec.enc.w, &codec.enc.b};
    }
    std::vector<Tensor*> user_grads() {
        return {&net.emb.dtable, &net.conv.dw, &net.conv.db, &codec.enc.dw, &codec.enc.db};
    }
    std::vector<Tensor*> server_params() {
        return {&codec.dec.w, &codec.dec.b, &net.lstm.wx, &net.lstm.wh, &net.lstm.b,
                &net.fc1.w,   &net.fc1.b,   &net.fc2.w,   &net.fc2.b};
    }
    std::vector<Tensor*> server_grads() {
        return {&codec.dec.dw, &codec.dec.db, &net.lstm.dwx, &net.lstm.dwh, &net.lstm.db,
                &net.fc1.dw,   &net.fc1.db,   &net.fc2.dw,   &net.fc2.db};
    }

    void zero_grads() {
        net.zero_grads();
        codec.enc.dw.zero();
        codec.enc.db.zero();
        codec.dec.dw.zero();
        codec.dec.db.zero();
    }
};

// ---------------------------------------------------------------------------
// Checkpoint: "WLCK" magic, u32 version, u32 tensor count, then per tensor a
// u16 name length + name + u32 rank + u32 dims, then all float32 values in
// parameter order. All integers and floats little-endian.
// ---------------------------------------------------------------------------

namespace detail {
inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline const std::vector<std::string>& model_param_names() {
    static const std::vector<std::string> names = {
        "embedding.table", "conv.w", "conv.b", "lstm.wx", "lstm.wh",
        "lstm.b",          "fc1.w",  "fc1.b",  "fc2.w",   "fc2.b"};
    return names;
}

inline void save_checkpoint(const SentimentModel& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write("WLCK", 4);
    detail::write_u32(os, 1);
    auto ps = m.params();
    const auto& names = model_param_names();
    detail::write_u32(os, static_cast<uint32_t>(ps.size()));
    for (size_t i = 0; i < ps.size(); ++i) {
        detail::write_u32(os, static_cast<uint32_t>(names[i].size()));
        os.write(names[i].data(), static_cast<std::streamsize>(names[i].size()));
        detail::write_u32(os, static_cast<uint32_t>(ps[i]->shape.size()));
        for (int d : ps[i]->shape) detail::write_u32(os, static_cast<uint32_t>(d));
    }
    for (const Tensor* p : ps) {
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(p->data.data()),
                 static_cast<std::streamsize>(p->size() * 4));
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed");
}

inline void load_checkpoint(SentimentModel& m, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "WLCK", 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic");
    if (detail::read_u32(is) != 1) throw std::runtime_error("load_checkpoint: bad version");
    auto ps = m.params();
    uint32_t count = detail::read_u32(is);
    if (count != ps.size()) throw std::runtime_error("load_checkpoint: tensor count mismatch");
    for (size_t i = 0; i < ps.size(); ++i) {
        uint32_t name_len = detail::read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        uint32_t rank = detail::read_u32(is);
        std::vector<int> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(detail::read_u32(is));
        if (shape != ps[i]->shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    }
    for (Tensor* p : ps)
        is.read(reinterpret_cast<char*>(p->data.data()),
                static_cast<std::streamsize>(p->size() * 4));
    if (!is) throw std::runtime_error("load_checkpoint: truncated file");
}

}  // namespace wirelearn
