#ifndef CDC_HEADS_HPP
#define CDC_HEADS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cdc/matrix.hpp"
#include "cdc/rng.hpp"

namespace cdc {

// Three-layer head: linear (D->H), batch norm, ReLU, linear (H->C).

struct HeadParams {
    Matrix w1;                            // H x D
    std::vector<double> b1;               // H
    std::vector<double> bn_gamma;         // H
    std::vector<double> bn_beta;          // H
    std::vector<double> bn_running_mean;  // H
    std::vector<double> bn_running_var;   // H, entries > 0
    Matrix w2;                            // C x H
    std::vector<double> b2;               // C

    std::size_t in_dim() const { return w1.cols; }
    std::size_t hidden() const { return w1.rows; }
    std::size_t classes() const { return w2.rows; }

    /// Head with zero linear weights/biases and neutral batch-norm state
    /// (gamma 1, beta 0, running mean 0, running var 1).
    static HeadParams neutral(std::size_t d, std::size_t h, std::size_t c);

    /// Gaussian weights scaled by 1/sqrt(fan_in); neutral batch norm.
    static HeadParams random_init(std::size_t d, std::size_t h, std::size_t c, RngState rng);

    /// Trainable tensors in fixed order: w1, b1, gamma, beta, w2, b2.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
};

struct HeadGrads {
    Matrix w1;
    std::vector<double> b1, bn_gamma, bn_beta;
    Matrix w2;
    std::vector<double> b2;
    Matrix input;  // gradient with respect to the head input z

    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
};

enum class Mode { Train, Eval };

struct ForwardCache {
    Matrix input;                 // B x D
    Matrix pre_bn;                // B x H
    std::vector<double> bn_mean;  // H, statistics actually used
    std::vector<double> bn_inv;   // H, 1/sqrt(var + eps)
    Matrix post_relu;             // B x H
    Matrix logits;                // B x C
    Mode mode = Mode::Eval;
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

/// Forward pass. Train mode uses batch statistics (batch size >= 2) and
/// updates running averages in params; eval mode uses running statistics and
/// leaves params untouched.
ForwardCache head_forward(HeadParams& params, const Matrix& z, Mode mode);

/// Exact gradients for every parameter, including the batch-norm backward
/// through the batch mean and variance, plus the input gradient.
HeadGrads head_backward(const HeadParams& params, const ForwardCache& cache,
                        const Matrix& dlogits);

struct AdamState {
    std::uint64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m;  // first moments, concatenated over all tensors
    std::vector<double> v;  // second moments

    static AdamState for_params(const std::vector<std::span<const double>>& tensors, double lr);
};

/// Bias-corrected Adam update, applied in tensor order.
void adam_step(std::vector<std::span<double>> params,
               const std::vector<std::span<const double>>& grads, AdamState& state);

enum class EncoderMode { Identity, Adapter };

/// Feature-extractor stand-in: identity, or a trainable square affine map
/// initialized at the identity.
struct EncoderParams {
    EncoderMode mode = EncoderMode::Identity;
    Matrix w;               // D x D when adapter
    std::vector<double> b;  // D when adapter

    static EncoderParams identity() { return EncoderParams{}; }
    static EncoderParams adapter(std::size_t d);

    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
};

Matrix encoder_forward(const EncoderParams& enc, const Matrix& x);

struct EncoderGrads {
    Matrix w;
    std::vector<double> b;

    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
};

/// Adapter-mode gradients from the downstream input gradient dz.
EncoderGrads encoder_backward(const EncoderParams& enc, const Matrix& x, const Matrix& dz);

}  // namespace cdc

#endif  // CDC_HEADS_HPP
