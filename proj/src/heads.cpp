#include "cdc/heads.hpp"

#include <cmath>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"

namespace cdc {

namespace {

// out (B x R) = x (B x D) * wT + bias, with w given as R x D.
Matrix linear_forward(const Matrix& x, const Matrix& w, const std::vector<double>& bias) {
    Matrix out(x.rows, w.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* o = out.row(i);
        for (std::size_t r = 0; r < w.rows; ++r)
            o[r] = kernels::dot(x.row(i), w.row(r), x.cols) + bias[r];
    }
    return out;
}

}  // namespace

HeadParams HeadParams::neutral(std::size_t d, std::size_t h, std::size_t c) {
    HeadParams p;
    p.w1 = Matrix(h, d);
    p.b1.assign(h, 0.0);
    p.bn_gamma.assign(h, 1.0);
    p.bn_beta.assign(h, 0.0);
    p.bn_running_mean.assign(h, 0.0);
    p.bn_running_var.assign(h, 1.0);
    p.w2 = Matrix(c, h);
    p.b2.assign(c, 0.0);
    return p;
}

HeadParams HeadParams::random_init(std::size_t d, std::size_t h, std::size_t c, RngState rng) {
    HeadParams p = neutral(d, h, c);
    double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    double s2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (double& w : p.w1.data) w = s1 * rng.normal();
    for (double& w : p.w2.data) w = s2 * rng.normal();
    return p;
}

std::vector<std::span<double>> HeadParams::tensors() {
    return {std::span<double>(w1.data), std::span<double>(b1), std::span<double>(bn_gamma),
            std::span<double>(bn_beta), std::span<double>(w2.data), std::span<double>(b2)};
}

std::vector<std::span<const double>> HeadParams::tensors() const {
    return {std::span<const double>(w1.data), std::span<const double>(b1),
            std::span<const double>(bn_gamma), std::span<const double>(bn_beta),
            std::span<const double>(w2.data), std::span<const double>(b2)};
}

std::vector<std::span<double>> HeadGrads::tensors() {
    return {std::span<double>(w1.data), std::span<double>(b1), std::span<double>(bn_gamma),
            std::span<double>(bn_beta), std::span<double>(w2.data), std::span<double>(b2)};
}

std::vector<std::span<const double>> HeadGrads::tensors() const {
    return {std::span<const double>(w1.data), std::span<const double>(b1),
            std::span<const double>(bn_gamma), std::span<const double>(bn_beta),
            std::span<const double>(w2.data), std::span<const double>(b2)};
}

ForwardCache head_forward(HeadParams& params, const Matrix& z, Mode mode) {
    const std::size_t b = z.rows, h = params.hidden();
    if (z.cols != params.in_dim()) throw InvalidInput("head_forward: input width mismatch");
    if (mode == Mode::Train && b < 2)
        throw InvalidInput("head_forward: train mode needs batch size >= 2");
    if (b == 0) throw InvalidInput("head_forward: empty batch");

    ForwardCache cache;
    cache.mode = mode;
    cache.input = z;
    cache.pre_bn = linear_forward(z, params.w1, params.b1);

    cache.bn_mean.resize(h);
    cache.bn_inv.resize(h);
    if (mode == Mode::Train) {
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t j = 0; j < h; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < b; ++i) mean += cache.pre_bn.at(i, j);
            mean *= inv_b;
            double var = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                double d = cache.pre_bn.at(i, j) - mean;
                var += d * d;
            }
            var *= inv_b;
            cache.bn_mean[j] = mean;
            cache.bn_inv[j] = 1.0 / std::sqrt(var + kBnEps);
            // Running averages track the unbiased batch variance.
            double var_unbiased = var * static_cast<double>(b) / static_cast<double>(b - 1);
            params.bn_running_mean[j] = (1.0 - kBnMomentum) * params.bn_running_mean[j] + kBnMomentum * mean;
            params.bn_running_var[j] = (1.0 - kBnMomentum) * params.bn_running_var[j] + kBnMomentum * var_unbiased;
        }
    } else {
        for (std::size_t j = 0; j < h; ++j) {
            cache.bn_mean[j] = params.bn_running_mean[j];
            cache.bn_inv[j] = 1.0 / std::sqrt(params.bn_running_var[j] + kBnEps);
        }
    }

    cache.post_relu = Matrix(b, h);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            double xhat = (cache.pre_bn.at(i, j) - cache.bn_mean[j]) * cache.bn_inv[j];
            double y = params.bn_gamma[j] * xhat + params.bn_beta[j];
            cache.post_relu.at(i, j) = y > 0.0 ? y : 0.0;
        }

    cache.logits = linear_forward(cache.post_relu, params.w2, params.b2);
    return cache;
}

HeadGrads head_backward(const HeadParams& params, const ForwardCache& cache,
                        const Matrix& dlogits) {
    const std::size_t b = cache.input.rows;
    const std::size_t d = params.in_dim(), h = params.hidden(), c = params.classes();
    if (dlogits.rows != b || dlogits.cols != c)
        throw InvalidInput("head_backward: dlogits shape mismatch");
    if (cache.pre_bn.rows != b || cache.pre_bn.cols != h || cache.input.cols != d)
        throw InvalidInput("head_backward: cache shape mismatch");

    HeadGrads g;
    g.w1 = Matrix(h, d);
    g.b1.assign(h, 0.0);
    g.bn_gamma.assign(h, 0.0);
    g.bn_beta.assign(h, 0.0);
    g.w2 = Matrix(c, h);
    g.b2.assign(c, 0.0);
    g.input = Matrix(b, d);

    // Output linear layer.
    Matrix d_post(b, h);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t k = 0; k < c; ++k) {
            double gl = dlogits.at(i, k);
            if (gl == 0.0) continue;
            kernels::axpy(gl, cache.post_relu.row(i), g.w2.row(k), h);
            kernels::axpy(gl, params.w2.row(k), d_post.row(i), h);
            g.b2[k] += gl;
        }
    }

    // ReLU mask (zero slope at exactly zero), then batch-norm output grad.
    Matrix dy(b, h);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < h; ++j)
            dy.at(i, j) = cache.post_relu.at(i, j) > 0.0 ? d_post.at(i, j) : 0.0;

    // Batch-norm backward. Train mode differentiates through the batch mean
    // and variance; eval mode treats the running statistics as constants.
    Matrix da(b, h);
    if (cache.mode == Mode::Train) {
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t j = 0; j < h; ++j) {
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                double xhat = (cache.pre_bn.at(i, j) - cache.bn_mean[j]) * cache.bn_inv[j];
                double dxhat = dy.at(i, j) * params.bn_gamma[j];
                s1 += dxhat;
                s2 += dxhat * xhat;
                g.bn_gamma[j] += dy.at(i, j) * xhat;
                g.bn_beta[j] += dy.at(i, j);
            }
            for (std::size_t i = 0; i < b; ++i) {
                double xhat = (cache.pre_bn.at(i, j) - cache.bn_mean[j]) * cache.bn_inv[j];
                double dxhat = dy.at(i, j) * params.bn_gamma[j];
                da.at(i, j) = cache.bn_inv[j] * (dxhat - inv_b * s1 - xhat * inv_b * s2);
            }
        }
    } else {
        for (std::size_t j = 0; j < h; ++j) {
            for (std::size_t i = 0; i < b; ++i) {
                double xhat = (cache.pre_bn.at(i, j) - cache.bn_mean[j]) * cache.bn_inv[j];
                g.bn_gamma[j] += dy.at(i, j) * xhat;
                g.bn_beta[j] += dy.at(i, j);
                da.at(i, j) = dy.at(i, j) * params.bn_gamma[j] * cache.bn_inv[j];
            }
        }
    }

    // Input linear layer.
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < h; ++j) {
            double ga = da.at(i, j);
            if (ga == 0.0) continue;
            kernels::axpy(ga, cache.input.row(i), g.w1.row(j), d);
            kernels::axpy(ga, params.w1.row(j), g.input.row(i), d);
            g.b1[j] += ga;
        }
    }
    return g;
}

AdamState AdamState::for_params(const std::vector<std::span<const double>>& tensors, double lr) {
    AdamState s;
    s.lr = lr;
    std::size_t total = 0;
    for (const auto& t : tensors) total += t.size();
    s.m.assign(total, 0.0);
    s.v.assign(total, 0.0);
    return s;
}

void adam_step(std::vector<std::span<double>> params,
               const std::vector<std::span<const double>>& grads, AdamState& state) {
    if (params.size() != grads.size()) throw InvalidInput("adam_step: tensor count mismatch");
    std::size_t total = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t].size() != grads[t].size()) throw InvalidInput("adam_step: shape mismatch");
        total += params[t].size();
    }
    if (total != state.m.size()) throw InvalidInput("adam_step: state size mismatch");

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    std::size_t off = 0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        double* p = params[t].data();
        const double* g = grads[t].data();
        for (std::size_t i = 0; i < params[t].size(); ++i) {
            double& m = state.m[off + i];
            double& v = state.v[off + i];
            m = state.beta1 * m + (1.0 - state.beta1) * g[i];
            v = state.beta2 * v + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m / c1;
            double vhat = v / c2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        off += params[t].size();
    }
}

EncoderParams EncoderParams::adapter(std::size_t d) {
    EncoderParams e;
    e.mode = EncoderMode::Adapter;
    e.w = Matrix::identity(d);
    e.b.assign(d, 0.0);
    return e;
}

std::vector<std::span<double>> EncoderParams::tensors() {
    if (mode == EncoderMode::Identity) return {};
    return {std::span<double>(w.data), std::span<double>(b)};
}

std::vector<std::span<const double>> EncoderParams::tensors() const {
    if (mode == EncoderMode::Identity) return {};
    return {std::span<const double>(w.data), std::span<const double>(b)};
}

Matrix encoder_forward(const EncoderParams& enc, const Matrix& x) {
    if (enc.mode == EncoderMode::Identity) return x;
    if (x.cols != enc.w.cols) throw InvalidInput("encoder_forward: input width mismatch");
    return linear_forward(x, enc.w, enc.b);
}

EncoderGrads encoder_backward(const EncoderParams& enc, const Matrix& x, const Matrix& dz) {
    if (enc.mode == EncoderMode::Identity)
        throw InvalidInput("encoder_backward: identity encoder has no parameters");
    if (dz.rows != x.rows || dz.cols != enc.w.rows)
        throw InvalidInput("encoder_backward: shape mismatch");
    EncoderGrads g;
    g.w = Matrix(enc.w.rows, enc.w.cols);
    g.b.assign(enc.b.size(), 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t r = 0; r < enc.w.rows; ++r) {
            double gd = dz.at(i, r);
            if (gd == 0.0) continue;
            kernels::axpy(gd, x.row(i), g.w.row(r), x.cols);
            g.b[r] += gd;
        }
    }
    return g;
}

std::vector<std::span<double>> EncoderGrads::tensors() {
    return {std::span<double>(w.data), std::span<double>(b)};
}

std::vector<std::span<const double>> EncoderGrads::tensors() const {
    return {std::span<const double>(w.data), std::span<const double>(b)};
}

}  // namespace cdc
