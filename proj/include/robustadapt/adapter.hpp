#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "robustadapt/matrix.hpp"
#include "robustadapt/rng.hpp"

namespace robustadapt {

/// Bottleneck adapter: Linear(D->H) -> BatchNorm -> ReLU -> Linear(H->D).
/// Templated so the trainer runs the f32 storage type while gradient checks
/// run an f64 shadow of the identical math. Dot products accumulate in f64
/// in both instantiations.
template <typename Real>
struct AdapterNet {
    size_t dim = 0;
    size_t hidden = 0;
    bool batchnorm = true;
    Real bn_momentum = Real(0.1);
    Real bn_eps = Real(1e-5);
    BasicMatrix<Real> w1;  // dim x hidden (down-projection)
    std::vector<Real> b1;
    std::vector<Real> gamma, beta;
    std::vector<Real> running_mean, running_var;
    BasicMatrix<Real> w2;  // hidden x dim (up-projection)
    std::vector<Real> b2;

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, unit
    /// running variance, identity batchnorm affine.
    static AdapterNet init(size_t dim, size_t hidden, Rng& rng, bool batchnorm = true);

    template <typename Other>
    AdapterNet<Other> cast() const {
        AdapterNet<Other> out;
        out.dim = dim;
        out.hidden = hidden;
        out.batchnorm = batchnorm;
        out.bn_momentum = Other(bn_momentum);
        out.bn_eps = Other(bn_eps);
        const auto cast_mat = [](const BasicMatrix<Real>& m) {
            BasicMatrix<Other> o(m.rows, m.cols);
            for (size_t i = 0; i < m.data.size(); ++i) o.data[i] = Other(m.data[i]);
            return o;
        };
        const auto cast_vec = [](const std::vector<Real>& v) {
            std::vector<Other> o(v.size());
            for (size_t i = 0; i < v.size(); ++i) o[i] = Other(v[i]);
            return o;
        };
        out.w1 = cast_mat(w1);
        out.b1 = cast_vec(b1);
        out.gamma = cast_vec(gamma);
        out.beta = cast_vec(beta);
        out.running_mean = cast_vec(running_mean);
        out.running_var = cast_vec(running_var);
        out.w2 = cast_mat(w2);
        out.b2 = cast_vec(b2);
        return out;
    }

    bool operator==(const AdapterNet&) const = default;
};

using AdapterParams = AdapterNet<float>;

enum class ForwardMode { train, eval };

/// Forward pass results plus everything the backward pass needs. The forward
/// itself never mutates the net; train mode reports the would-be running
/// statistics in new_running_mean/var and the caller commits them.
template <typename Real>
struct AdapterActivations {
    ForwardMode mode = ForwardMode::eval;
    BasicMatrix<Real> input;   // B x D
    BasicMatrix<Real> z1;      // B x H, pre-normalization
    BasicMatrix<Real> xhat;    // B x H, normalized activations (batchnorm on)
    std::vector<Real> invstd;  // H
    BasicMatrix<Real> hidden;  // B x H, post-ReLU
    BasicMatrix<Real> output;  // B x D, raw adapter outputs
    std::vector<Real> new_running_mean, new_running_var;  // train mode only
};

/// Train mode uses batch statistics (biased variance, divisor B) and requires
/// B >= 2; eval mode uses running statistics and is batch-size independent.
template <typename Real>
AdapterActivations<Real> adapter_forward(const AdapterNet<Real>& net,
                                         const BasicMatrix<Real>& batch, ForwardMode mode);

template <typename Real>
struct AdapterGrads {
    BasicMatrix<Real> w1;
    std::vector<Real> b1, gamma, beta;
    BasicMatrix<Real> w2;
    std::vector<Real> b2;

    static AdapterGrads zeros(size_t dim, size_t hidden);
    void accumulate(const AdapterGrads& other, Real scale = Real(1));
};

/// Backpropagates d_output (dL/d raw outputs) through the whole stack,
/// including the train-mode batch-statistic coupling.
template <typename Real>
AdapterGrads<Real> adapter_backward(const AdapterNet<Real>& net,
                                    const AdapterActivations<Real>& acts,
                                    const BasicMatrix<Real>& d_output);

/// Row-wise x / max(||x||, eps) copy.
template <typename Real>
BasicMatrix<Real> normalize_rows_copy(const BasicMatrix<Real>& m);

struct LossConfig {
    float ce_temperature = 0.01f;
    float contrastive_temperature = 0.1f;
};

template <typename Real>
struct LossValue {
    double loss = 0.0;
    AdapterGrads<Real> grads;
    AdapterActivations<Real> acts;
};

/// Cross-entropy of softmax(f_hat(u) . v_hat_c / tau) against labels, meaned
/// over the batch. Class embeddings are frozen constants; the gradient flows
/// through the output normalization and (in train mode) batch statistics.
template <typename Real>
LossValue<Real> ce_loss(const AdapterNet<Real>& net, const BasicMatrix<Real>& batch,
                        const std::vector<int>& labels, const BasicMatrix<Real>& class_matrix,
                        const LossConfig& cfg, ForwardMode mode = ForwardMode::train);

/// Supervised contrastive loss: each positive is scored against the anchor
/// with all negatives in its denominator (never the other positives). The
/// anchor, positives, and negatives share one train-mode forward batch.
template <typename Real>
LossValue<Real> supcon_loss(const AdapterNet<Real>& net, std::span<const Real> anchor,
                            const BasicMatrix<Real>& positives,
                            const BasicMatrix<Real>& negatives, const LossConfig& cfg);

enum class LossKind { ce, supcon };

/// Small randomized problem for finite-difference validation (f64 end to end).
struct GradCheckFixture {
    LossKind kind = LossKind::ce;
    AdapterNet<double> net;
    LossConfig cfg;
    BasicMatrix<double> batch;  // ce
    std::vector<int> labels;
    BasicMatrix<double> class_matrix;
    std::vector<double> anchor;  // supcon
    BasicMatrix<double> positives, negatives;
};

GradCheckFixture make_grad_check_fixture(LossKind kind, Rng& rng);

/// Max over trainable parameters of |g_analytic - g_fd| / max(1e-8,
/// |g_analytic| + |g_fd|), with central finite differences of step epsilon.
double grad_check(const GradCheckFixture& fixture, double epsilon);

/// Checkpoint file: text header (dims, batchnorm constants, payload checksum)
/// followed by little-endian f32 blobs per field.
void save_adapter_checkpoint(const AdapterParams& params, const std::filesystem::path& path);
AdapterParams load_adapter_checkpoint(const std::filesystem::path& path);

}  // namespace robustadapt
