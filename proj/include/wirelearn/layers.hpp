#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wirelearn/rng.hpp"
#include "wirelearn/tensor.hpp"

namespace wirelearn {

inline float sigmoid_scalar(float x) {
    // split on sign to avoid overflow in exp
    if (x >= 0.0f) {
        float e = std::exp(-x);
        return 1.0f / (1.0f + e);
    }
    float e = std::exp(x);
    return e / (1.0f + e);
}

/// Fan-scaled uniform init (Glorot limits).
inline void glorot_init(Tensor& t, int fan_in, int fan_out, RngStream& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

inline void uniform_init(Tensor& t, double limit, RngStream& rng) {
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------
// Embedding: integer ids -> rows of a trainable table.
// ---------------------------------------------------------------------------

struct Embedding {
    Tensor table;   // [vocab, dim]
    Tensor dtable;  // same shape

    Embedding() = default;
    Embedding(int vocab, int dim)
        : table({vocab, dim}), dtable({vocab, dim}) {}

    struct Cache {
        std::vector<int32_t> ids;
    };

    int dim() const { return table.shape[1]; }
    int vocab() const { return table.shape[0]; }

    /// ids [T] -> [T, dim]
    Tensor forward(const std::vector<int32_t>& ids, Cache& cache) const {
        const int d = dim();
        Tensor out({static_cast<int>(ids.size()), d});
        for (size_t t = 0; t < ids.size(); ++t) {
            int32_t id = ids[t];
            if (id < 0 || id >= vocab())
                throw std::invalid_argument("Embedding: id out of range");
            const float* row = &table.data[static_cast<size_t>(id) * d];
            float* dst = &out.data[t * d];
            for (int j = 0; j < d; ++j) dst[j] = row[j];
        }
        cache.ids = ids;
        return out;
    }

    /// upstream [T, dim]; scatter-adds into dtable. No input gradient (ids).
    void backward(const Tensor& upstream, const Cache& cache) {
        const int d = dim();
        if (upstream.shape != std::vector<int>{static_cast<int>(cache.ids.size()), d})
            throw std::invalid_argument("Embedding: upstream shape mismatch");
        for (size_t t = 0; t < cache.ids.size(); ++t) {
            float* row = &dtable.data[static_cast<size_t>(cache.ids[t]) * d];
            const float* src = &upstream.data[t * d];
            for (int j = 0; j < d; ++j) row[j] += src[j];
        }
    }
};

// ---------------------------------------------------------------------------
// Conv1d, valid (no padding): [T, in_ch] -> [T-k+1, filters].
// ---------------------------------------------------------------------------

struct Conv1d {
    int kernel = 0, in_ch = 0, filters = 0;
    Tensor w;   // [kernel, in_ch, filters]
    Tensor b;   // [filters]
    Tensor dw, db;

    Conv1d() = default;
    Conv1d(int kernel_, int in_ch_, int filters_)
        : kernel(kernel_), in_ch(in_ch_), filters(filters_),
          w({kernel_, in_ch_, filters_}), b({filters_}),
          dw({kernel_, in_ch_, filters_}), db({filters_}) {}

    struct Cache {
        Tensor input;
    };

    Tensor forward(const Tensor& x, Cache& cache) const {
        if (x.shape.size() != 2 || x.shape[1] != in_ch)
            throw std::invalid_argument("Conv1d: bad input shape");
        const int T = x.shape[0];
        const int To = T - kernel + 1;
        if (To <= 0) throw std::invalid_argument("Conv1d: input shorter than kernel");
        Tensor out({To, filters});
        for (int t = 0; t < To; ++t) {
            float* dst = &out.data[static_cast<size_t>(t) * filters];
            for (int f = 0; f < filters; ++f) dst[f] = b.data[f];
            for (int k = 0; k < kernel; ++k) {
                const float* xin = &x.data[static_cast<size_t>(t + k) * in_ch];
                const float* wk = &w.data[static_cast<size_t>(k) * in_ch * filters];
                for (int c = 0; c < in_ch; ++c) {
                    float xv = xin[c];
                    const float* wrow = &wk[static_cast<size_t>(c) * filters];
                    for (int f = 0; f < filters; ++f) dst[f] += xv * wrow[f];
                }
            }
        }
        cache.input = x;
        return out;
    }

    Tensor backward(const Tensor& upstream, const Cache& cache) {
        const Tensor& x = cache.input;
        const int T = x.shape[0];
        const int To = T - kernel + 1;
        if (upstream.shape != std::vector<int>{To, filters})
            throw std::invalid_argument("Conv1d: upstream shape mismatch");
        Tensor dx({T, in_ch});
        for (int t = 0; t < To; ++t) {
            const float* up = &upstream.data[static_cast<size_t>(t) * filters];
            for (int f = 0; f < filters; ++f) db.data[f] += up[f];
            for (int k = 0; k < kernel; ++k) {
                const float* xin = &x.data[static_cast<size_t>(t + k) * in_ch];
                float* dxin = &dx.data[static_cast<size_t>(t + k) * in_ch];
                float* dwk = &dw.data[static_cast<size_t>(k) * in_ch * filters];
                const float* wk = &w.data[static_cast<size_t>(k) * in_ch * filters];
                for (int c = 0; c < in_ch; ++c) {
                    float xv = xin[c];
                    const float* wrow = &wk[static_cast<size_t>(c) * filters];
                    float* dwrow = &dwk[static_cast<size_t>(c) * filters];
                    float acc = 0.0f;
                    for (int f = 0; f < filters; ++f) {
                        dwrow[f] += xv * up[f];
                        acc += wrow[f] * up[f];
                    }
                    dxin[c] += acc;
                }
            }
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------
// MaxPool1d, width 2, stride 2 along time: [T, C] -> [floor(T/2), C].
// ---------------------------------------------------------------------------

struct MaxPool1d {
    struct Cache {
        std::vector<int32_t> argmax;  // flat input index per output element
        int in_t = 0, ch = 0;
    };

    Tensor forward(const Tensor& x, Cache& cache) const {
        if (x.shape.size() != 2) throw std::invalid_argument("MaxPool1d: need 2-D input");
        const int T = x.shape[0], C = x.shape[1];
        const int To = T / 2;
        Tensor out({To, C});
        cache.argmax.assign(static_cast<size_t>(To) * C, 0);
        cache.in_t = T;
        cache.ch = C;
        for (int t = 0; t < To; ++t) {
            const float* a = &x.data[static_cast<size_t>(2 * t) * C];
            const float* b2 = &x.data[static_cast<size_t>(2 * t + 1) * C];
            float* dst = &out.data[static_cast<size_t>(t) * C];
            int32_t* am = &cache.argmax[static_cast<size_t>(t) * C];
            for (int c = 0; c < C; ++c) {
                // ties take the earlier position
                if (a[c] >= b2[c]) {
                    dst[c] = a[c];
                    am[c] = (2 * t) * C + c;
                } else {
                    dst[c] = b2[c];
                    am[c] = (2 * t + 1) * C + c;
                }
            }
        }
        return out;
    }

    Tensor backward(const Tensor& upstream, const Cache& cache) const {
        const int To = cache.in_t / 2, C = cache.ch;
        if (upstream.shape != std::vector<int>{To, C})
            throw std::invalid_argument("MaxPool1d: upstream shape mismatch");
        Tensor dx({cache.in_t, C});
        for (size_t i = 0; i < upstream.size(); ++i)
            dx.data[static_cast<size_t>(cache.argmax[i])] += upstream.data[i];
        return dx;
    }
};

// ---------------------------------------------------------------------------
// Dense with optional fused activation.
// ---------------------------------------------------------------------------

enum class Act { Linear, Relu, Sigmoid };

struct Dense {
    int in = 0, out = 0;
    Act act = Act::Linear;
    Tensor w;  // [out, in]
    Tensor b;  // [out]
    Tensor dw, db;

    Dense() = default;
    Dense(int in_, int out_, Act act_ = Act::Linear)
        : in(in_), out(out_), act(act_),
          w({out_, in_}), b({out_}), dw({out_, in_}), db({out_}) {}

    struct Cache {
        Tensor input;   // [in]
        Tensor output;  // [out], post-activation
    };

    Tensor forward(const Tensor& x, Cache& cache) const {
        if (static_cast<int>(x.size()) != in)
            throw std::invalid_argument("Dense: bad input size");
        Tensor y({out});
        for (int r = 0; r < out; ++r) {
            const float* wr = &w.data[static_cast<size_t>(r) * in];
            float acc = b.data[r];
            for (int c = 0; c < in; ++c) acc += wr[c] * x.data[c];
            y.data[r] = acc;
        }
        switch (act) {
            case Act::Linear: break;
            case Act::Relu:
                for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
                break;
            case Act::Sigmoid:
                for (float& v : y.data) v = sigmoid_scalar(v);
                break;
        }
        cache.input = x;
        cache.output = y;
        return y;
    }

    Tensor backward(const Tensor& upstream, const Cache& cache) {
        if (static_cast<int>(upstream.size()) != out)
            throw std::invalid_argument("Dense: upstream size mismatch");
        // fold activation derivative into the upstream signal
        Tensor dz = upstream;
        switch (act) {
            case Act::Linear: break;
            case Act::Relu:
                for (int r = 0; r < out; ++r)
                    if (cache.output.data[r] <= 0.0f) dz.data[r] = 0.0f;
                break;
            case Act::Sigmoid:
                for (int r = 0; r < out; ++r) {
                    float y = cache.output.data[r];
                    dz.data[r] *= y * (1.0f - y);
                }
                break;
        }
        Tensor dx({in});
        for (int r = 0; r < out; ++r) {
            float d = dz.data[r];
            db.data[r] += d;
            float* dwr = &dw.data[static_cast<size_t>(r) * in];
            const float* wr = &w.data[static_cast<size_t>(r) * in];
            const float* xin = cache.input.data.data();
            for (int c = 0; c < in; ++c) {
                dwr[c] += d * xin[c];
                dx.data[c] += d * wr[c];
            }
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------
// Standalone elementwise sigmoid (no parameters).
// ---------------------------------------------------------------------------

struct Sigmoid {
    struct Cache {
        Tensor output;
    };

    Tensor forward(const Tensor& x, Cache& cache) const {
        Tensor y = x;
        for (float& v : y.data) v = sigmoid_scalar(v);
        cache.output = y;
        return y;
    }

    Tensor backward(const Tensor& upstream, const Cache& cache) const {
        if (!upstream.same_shape(cache.output))
            throw std::invalid_argument("Sigmoid: upstream shape mismatch");
        Tensor dx = upstream;
        for (size_t i = 0; i < dx.size(); ++i) {
            float y = cache.output.data[i];
            dx.data[i] *= y * (1.0f - y);
        }
        return dx;
    }
};

// ---------------------------------------------------------------------------
// LSTM over a sequence, returning the final hidden state.
// Gate order throughout: input, forget, cell candidate, output.
// Single bias vector per gate.
// ---------------------------------------------------------------------------

struct Lstm {
    int in = 0, units = 0;
    Tensor wx;  // [4*units, in]
    Tensor wh;  // [4*units, units]
    Tensor b;   // [4*units]
    Tensor dwx, dwh, db;

    Lstm() = default;
    Lstm(int in_, int units_)
        : in(in_), units(units_),
          wx({4 * units_, in_}), wh({4 * units_, units_}), b({4 * units_}),
          dwx({4 * units_, in_}), dwh({4 * units_, units_}), db({4 * units_}) {}

    struct Cache {
        Tensor input;                 // [T, in]
        std::vector<Tensor> gates;    // per step, [4*units] post-nonlinearity (i,f,g,o)
        std::vector<Tensor> c_states; // per step, [units]
        std::vector<Tensor> h_states; // per step, [units]
    };

    /// x [T, in] -> final hidden [units]
    Tensor forward(const Tensor& x, Cache& cache) const {
        if (x.shape.size() != 2 || x.shape[1] != in)
            throw std::invalid_argument("Lstm: bad input shape");
        const int T = x.shape[0];
        const int u = units;
        cache.input = x;
        cache.gates.assign(T, Tensor({4 * u}));
        cache.c_states.assign(T, Tensor({u}));
        cache.h_states.assign(T, Tensor({u}));
        Tensor h({u}), c({u});
        for (int t = 0; t < T; ++t) {
            const float* xt = &x.data[static_cast<size_t>(t) * in];
            Tensor& z = cache.gates[t];
            // z = wx*x_t + wh*h_{t-1} + b, then gate nonlinearities
            for (int r = 0; r < 4 * u; ++r) {
                const float* wxr = &wx.data[static_cast<size_t>(r) * in];
                float acc = b.data[r];
                for (int ccol = 0; ccol < in; ++ccol) acc += wxr[ccol] * xt[ccol];
                const float* whr = &wh.data[static_cast<size_t>(r) * u];
                for (int ccol = 0; ccol < u; ++ccol) acc += whr[ccol] * h.data[ccol];
                z.data[r] = acc;
            }
            for (int j = 0; j < u; ++j) {
                float ig = sigmoid_scalar(z.data[j]);
                float fg = sigmoid_scalar(z.data[u + j]);
                float gg = std::tanh(z.data[2 * u + j]);
                float og = sigmoid_scalar(z.data[3 * u + j]);
                z.data[j] = ig;
                z.data[u + j] = fg;
                z.data[2 * u + j] = gg;
                z.data[3 * u + j] = og;
                c.data[j] = fg * c.data[j] + ig * gg;
                h.data[j] = og * std::tanh(c.data[j]);
            }
            cache.c_states[t] = c;
            cache.h_states[t] = h;
        }
        return h;
    }

    /// upstream: gradient at the final hidden state, [units]. Returns d input.
    Tensor backward(const Tensor& upstream, const Cache& cache) {
        const int T = static_cast<int>(cache.gates.size());
        const int u = units;
        if (static_cast<int>(upstream.size()) != u)
            throw std::invalid_argument("Lstm: upstream size mismatch");
        if (T == 0) throw std::invalid_argument("Lstm: empty cache");
        Tensor dx({T, in});
        Tensor dh = upstream;
        Tensor dc({u});
        Tensor dz({4 * u});
        for (int t = T - 1; t >= 0; --t) {
            const Tensor& z = cache.gates[t];
            const Tensor& ct = cache.c_states[t];
            const float* cprev =
                t > 0 ? cache.c_states[t - 1].data.data() : nullptr;
            const float* hprev =
                t > 0 ? cache.h_states[t - 1].data.data() : nullptr;
            for (int j = 0; j < u; ++j) {
                float ig = z.data[j], fg = z.data[u + j];
                float gg = z.data[2 * u + j], og = z.data[3 * u + j];
                float tc = std::tanh(ct.data[j]);
                float dcj = dc.data[j] + dh.data[j] * og * (1.0f - tc * tc);
                float cp = cprev ? cprev[j] : 0.0f;
                dz.data[j] = dcj * gg * ig * (1.0f - ig);
                dz.data[u + j] = dcj * cp * fg * (1.0f - fg);
                dz.data[2 * u + j] = dcj * ig * (1.0f - gg * gg);
                dz.data[3 * u + j] = dh.data[j] * tc * og * (1.0f - og);
                dc.data[j] = dcj * fg;
            }
            const float* xt = &cache.input.data[static_cast<size_t>(t) * in];
            float* dxt = &dx.data[static_cast<size_t>(t) * in];
            Tensor dh_prev({u});
            for (int r = 0; r < 4 * u; ++r) {
                float d = dz.data[r];
                db.data[r] += d;
                float* dwxr = &dwx.data[static_cast<size_t>(r) * in];
                const float* wxr = &wx.data[static_cast<size_t>(r) * in];
                for (int ccol = 0; ccol < in; ++ccol) {
                    dwxr[ccol] += d * xt[ccol];
                    dxt[ccol] += d * wxr[ccol];
                }
                float* dwhr = &dwh.data[static_cast<size_t>(r) * u];
                const float* whr = &wh.data[static_cast<size_t>(r) * u];
                if (hprev) {
                    for (int ccol = 0; ccol < u; ++ccol) {
                        dwhr[ccol] += d * hprev[ccol];
                        dh_prev.data[ccol] += d * whr[ccol];
                    }
                } else {
                    for (int ccol = 0; ccol < u; ++ccol)
                        dh_prev.data[ccol] += d * whr[ccol];
                }
            }
            dh = dh_prev;
        }
        return dx;
    }
};

}  // namespace wirelearn
