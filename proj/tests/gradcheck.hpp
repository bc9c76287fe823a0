// Finite-difference oracle shared by the unit and acceptance suites.
//
// The oracle is an independent double-precision re-implementation of each
// forward pass, living entirely in test code. Central differences are taken
// on that reference (noise floor ~1e-12), production backward gradients are
// compared against them, and the production float32 forward is separately
// required to agree with the reference to float tolerance.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "wirelearn/rng.hpp"
#include "wirelearn/tensor.hpp"

namespace gradcheck {

using wirelearn::RngStream;
using wirelearn::Tensor;
using dvec = std::vector<double>;

inline dvec to_doubles(const Tensor& t) { return dvec(t.data.begin(), t.data.end()); }

inline double vector_rel_error(const dvec& analytic, const dvec& numeric) {
    double da = 0, dn = 0, diff = 0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        da += analytic[i] * analytic[i];
        dn += numeric[i] * numeric[i];
        double d = analytic[i] - numeric[i];
        diff += d * d;
    }
    double denom = std::max(std::sqrt(da), std::sqrt(dn));
    if (denom == 0.0) return std::sqrt(diff);
    return std::sqrt(diff) / denom;
}

/// Central differences of `loss` with respect to the entries of `theta`
/// (a double mirror of one tensor), at up to max_coords sampled coordinates,
/// compared against the production analytic gradient.
inline double check_against_reference(dvec& theta, const std::function<double()>& loss,
                                      const dvec& analytic_full, RngStream& pick,
                                      double eps = 1e-3, size_t max_coords = 24) {
    std::vector<size_t> coords;
    if (theta.size() <= max_coords) {
        for (size_t i = 0; i < theta.size(); ++i) coords.push_back(i);
    } else {
        for (size_t i = 0; i < max_coords; ++i)
            coords.push_back(static_cast<size_t>(pick.next_below(theta.size())));
    }
    dvec analytic, numeric;
    for (size_t c : coords) {
        double saved = theta[c];
        theta[c] = saved + eps;
        double up = loss();
        theta[c] = saved - eps;
        double down = loss();
        theta[c] = saved;
        numeric.push_back((up - down) / (2.0 * eps));
        analytic.push_back(analytic_full[c]);
    }
    return vector_rel_error(analytic, numeric);
}

/// Fixed signed probe: loss = sum_i r_i * out_i with r in {-1,-0.5,0.5,1}.
inline Tensor make_probe(const std::vector<int>& shape, RngStream& rng) {
    Tensor r(shape);
    for (float& v : r.data) {
        double u = rng.uniform();
        v = u < 0.25 ? -1.0f : u < 0.5 ? -0.5f : u < 0.75 ? 0.5f : 1.0f;
    }
    return r;
}

inline double probe_loss(const dvec& out, const Tensor& probe) {
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += out[i] * probe.data[i];
    return s;
}

inline double max_abs_diff(const Tensor& a, const dvec& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(static_cast<double>(a.data[i]) - b[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Double-precision reference forward passes (test-side oracles).
// ---------------------------------------------------------------------------

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// y = act(W x + b); W is [out,in] row-major. act: 0 linear, 1 relu, 2 sigmoid.
inline dvec ref_dense(const dvec& w, const dvec& b, const dvec& x, int act) {
    size_t out = b.size(), in = x.size();
    dvec y(out, 0.0);
    for (size_t r = 0; r < out; ++r) {
        double acc = b[r];
        for (size_t c = 0; c < in; ++c) acc += w[r * in + c] * x[c];
        if (act == 1) acc = acc > 0.0 ? acc : 0.0;
        if (act == 2) acc = ref_sigmoid(acc);
        y[r] = acc;
    }
    return y;
}

/// Valid convolution, x [T,cin] row-major, w [k,cin,f], y [T-k+1,f].
inline dvec ref_conv1d(const dvec& w, const dvec& b, const dvec& x, int T, int cin, int k,
                       int f) {
    int To = T - k + 1;
    dvec y(static_cast<size_t>(To) * f, 0.0);
    for (int t = 0; t < To; ++t)
        for (int j = 0; j < f; ++j) {
            double acc = b[static_cast<size_t>(j)];
            for (int kk = 0; kk < k; ++kk)
                for (int c = 0; c < cin; ++c)
                    acc += w[(static_cast<size_t>(kk) * cin + c) * f + j] *
                           x[static_cast<size_t>(t + kk) * cin + c];
            y[static_cast<size_t>(t) * f + j] = acc;
        }
    return y;
}

inline dvec ref_maxpool2(const dvec& x, int T, int C) {
    int To = T / 2;
    dvec y(static_cast<size_t>(To) * C, 0.0);
    for (int t = 0; t < To; ++t)
        for (int c = 0; c < C; ++c) {
            double a = x[static_cast<size_t>(2 * t) * C + c];
            double b = x[static_cast<size_t>(2 * t + 1) * C + c];
            y[static_cast<size_t>(t) * C + c] = a >= b ? a : b;
        }
    return y;
}

inline dvec ref_embedding(const dvec& table, const std::vector<int32_t>& ids, int dim) {
    dvec y(ids.size() * static_cast<size_t>(dim), 0.0);
    for (size_t t = 0; t < ids.size(); ++t)
        for (int j = 0; j < dim; ++j)
            y[t * dim + j] = table[static_cast<size_t>(ids[t]) * dim + j];
    return y;
}

/// Gate order (i,f,g,o); wx [4u,in], wh [4u,u], b [4u]; returns final hidden.
inline dvec ref_lstm(const dvec& wx, const dvec& wh, const dvec& b, const dvec& x, int T,
                     int in, int u) {
    dvec h(u, 0.0), c(u, 0.0), z(4 * static_cast<size_t>(u), 0.0);
    for (int t = 0; t < T; ++t) {
        for (int r = 0; r < 4 * u; ++r) {
            double acc = b[static_cast<size_t>(r)];
            for (int cc = 0; cc < in; ++cc)
                acc += wx[static_cast<size_t>(r) * in + cc] * x[static_cast<size_t>(t) * in + cc];
            for (int cc = 0; cc < u; ++cc)
                acc += wh[static_cast<size_t>(r) * u + cc] * h[static_cast<size_t>(cc)];
            z[static_cast<size_t>(r)] = acc;
        }
        for (int j = 0; j < u; ++j) {
            double ig = ref_sigmoid(z[static_cast<size_t>(j)]);
            double fg = ref_sigmoid(z[static_cast<size_t>(u + j)]);
            double gg = std::tanh(z[static_cast<size_t>(2 * u + j)]);
            double og = ref_sigmoid(z[static_cast<size_t>(3 * u + j)]);
            c[static_cast<size_t>(j)] = fg * c[static_cast<size_t>(j)] + ig * gg;
            h[static_cast<size_t>(j)] = og * std::tanh(c[static_cast<size_t>(j)]);
        }
    }
    return h;
}

}  // namespace gradcheck
