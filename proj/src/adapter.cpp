#include "robustadapt/adapter.hpp"

#include <algorithm>
#include <cmath>

#include "checkpoint_io.hpp"
#include "robustadapt/errors.hpp"
#include "robustadapt/numerics.hpp"

namespace robustadapt {

namespace {

template <typename Real>
void fill_uniform(Rng& rng, std::span<Real> out, double bound) {
    for (auto& x : out) x = Real((rng.next_double() * 2.0 - 1.0) * bound);
}

// C = A(B x K) * W(K x N) + bias, f64 accumulation per entry.
template <typename Real>
BasicMatrix<Real> linear(const BasicMatrix<Real>& a, const BasicMatrix<Real>& w,
                         const std::vector<Real>& bias) {
    BasicMatrix<Real> out(a.rows, w.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        const Real* arow = a.data.data() + i * a.cols;
        Real* orow = out.data.data() + i * out.cols;
        for (size_t j = 0; j < w.cols; ++j) {
            double acc = double(bias[j]);
            for (size_t k = 0; k < a.cols; ++k)
                acc += double(arow[k]) * double(w.at(k, j));
            orow[j] = Real(acc);
        }
    }
    return out;
}

template <typename Real>
void require_finite_params(const AdapterNet<Real>& net) {
    const auto check = [](std::span<const Real> v) {
        for (const Real x : v)
            if (!std::isfinite(double(x))) return false;
        return true;
    };
    if (!check(std::span<const Real>(net.w1.data)) || !check(std::span<const Real>(net.b1)) ||
        !check(std::span<const Real>(net.gamma)) || !check(std::span<const Real>(net.beta)) ||
        !check(std::span<const Real>(net.running_mean)) ||
        !check(std::span<const Real>(net.running_var)) ||
        !check(std::span<const Real>(net.w2.data)) || !check(std::span<const Real>(net.b2)))
        throw NonFiniteError("adapter parameters contain NaN/Inf");
}

}  // namespace

template <typename Real>
AdapterNet<Real> AdapterNet<Real>::init(size_t dim, size_t hidden, Rng& rng, bool batchnorm) {
    AdapterNet net;
    net.dim = dim;
    net.hidden = hidden;
    net.batchnorm = batchnorm;
    net.w1 = BasicMatrix<Real>(dim, hidden);
    net.b1.assign(hidden, Real(0));
    net.gamma.assign(hidden, Real(1));
    net.beta.assign(hidden, Real(0));
    net.running_mean.assign(hidden, Real(0));
    net.running_var.assign(hidden, Real(1));
    net.w2 = BasicMatrix<Real>(hidden, dim);
    net.b2.assign(dim, Real(0));

    const double bound1 = 1.0 / std::sqrt(double(dim));
    const double bound2 = 1.0 / std::sqrt(double(hidden));
    fill_uniform(rng, std::span<Real>(net.w1.data), bound1);
    fill_uniform(rng, std::span<Real>(net.b1), bound1);
    fill_uniform(rng, std::span<Real>(net.w2.data), bound2);
    fill_uniform(rng, std::span<Real>(net.b2), bound2);
    return net;
}

template <typename Real>
AdapterActivations<Real> adapter_forward(const AdapterNet<Real>& net,
                                         const BasicMatrix<Real>& batch, ForwardMode mode) {
    if (batch.cols != net.dim)
        throw ShapeMismatchError("batch cols " + std::to_string(batch.cols) + " vs adapter dim " +
                                 std::to_string(net.dim));
    if (mode == ForwardMode::train && batch.rows < 2)
        throw BatchTooSmallError("train-mode forward needs a batch of at least 2, got " +
                                 std::to_string(batch.rows));
    require_finite_params(net);

    const size_t B = batch.rows;
    const size_t H = net.hidden;

    AdapterActivations<Real> acts;
    acts.mode = mode;
    acts.input = batch;
    acts.z1 = linear(batch, net.w1, net.b1);

    BasicMatrix<Real> pre_relu;
    if (net.batchnorm) {
        acts.xhat = BasicMatrix<Real>(B, H);
        acts.invstd.assign(H, Real(0));
        pre_relu = BasicMatrix<Real>(B, H);

        if (mode == ForwardMode::train) {
            acts.new_running_mean.resize(H);
            acts.new_running_var.resize(H);
            for (size_t h = 0; h < H; ++h) {
                double mean = 0.0;
                for (size_t i = 0; i < B; ++i) mean += double(acts.z1.at(i, h));
                mean /= double(B);
                double var = 0.0;
                for (size_t i = 0; i < B; ++i) {
                    const double d = double(acts.z1.at(i, h)) - mean;
                    var += d * d;
                }
                var /= double(B);  // biased, divisor B
                const double invstd = 1.0 / std::sqrt(var + double(net.bn_eps));
                acts.invstd[h] = Real(invstd);
                for (size_t i = 0; i < B; ++i) {
                    const double xh = (double(acts.z1.at(i, h)) - mean) * invstd;
                    acts.xhat.at(i, h) = Real(xh);
                    pre_relu.at(i, h) =
                        Real(double(net.gamma[h]) * xh + double(net.beta[h]));
                }
                const double m = double(net.bn_momentum);
                acts.new_running_mean[h] =
                    Real((1.0 - m) * double(net.running_mean[h]) + m * mean);
                acts.new_running_var[h] =
                    Real((1.0 - m) * double(net.running_var[h]) + m * var);
            }
        } else {
            for (size_t h = 0; h < H; ++h) {
                const double invstd =
                    1.0 / std::sqrt(double(net.running_var[h]) + double(net.bn_eps));
                acts.invstd[h] = Real(invstd);
                for (size_t i = 0; i < B; ++i) {
                    const double xh =
                        (double(acts.z1.at(i, h)) - double(net.running_mean[h])) * invstd;
                    acts.xhat.at(i, h) = Real(xh);
                    pre_relu.at(i, h) =
                        Real(double(net.gamma[h]) * xh + double(net.beta[h]));
                }
            }
        }
    } else {
        pre_relu = acts.z1;
    }

    acts.hidden = BasicMatrix<Real>(B, H);
    for (size_t i = 0; i < B * H; ++i)
        acts.hidden.data[i] = pre_relu.data[i] > Real(0) ? pre_relu.data[i] : Real(0);

    acts.output = linear(acts.hidden, net.w2, net.b2);
    return acts;
}

template <typename Real>
AdapterGrads<Real> AdapterGrads<Real>::zeros(size_t dim, size_t hidden) {
    AdapterGrads g;
    g.w1 = BasicMatrix<Real>(dim, hidden);
    g.b1.assign(hidden, Real(0));
    g.gamma.assign(hidden, Real(0));
    g.beta.assign(hidden, Real(0));
    g.w2 = BasicMatrix<Real>(hidden, dim);
    g.b2.assign(dim, Real(0));
    return g;
}

template <typename Real>
void AdapterGrads<Real>::accumulate(const AdapterGrads& other, Real scale) {
    const auto acc = [scale](std::vector<Real>& dst, const std::vector<Real>& src) {
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    acc(w1.data, other.w1.data);
    acc(b1, other.b1);
    acc(gamma, other.gamma);
    acc(beta, other.beta);
    acc(w2.data, other.w2.data);
    acc(b2, other.b2);
}

template <typename Real>
AdapterGrads<Real> adapter_backward(const AdapterNet<Real>& net,
                                    const AdapterActivations<Real>& acts,
                                    const BasicMatrix<Real>& d_output) {
    const size_t B = acts.input.rows;
    const size_t H = net.hidden;
    const size_t D = net.dim;

    AdapterGrads<Real> g = AdapterGrads<Real>::zeros(D, H);

    // Up-projection: dW2 = hidden^T * dY, db2 = column sums of dY.
    for (size_t h = 0; h < H; ++h) {
        for (size_t j = 0; j < D; ++j) {
            double acc = 0.0;
            for (size_t i = 0; i < B; ++i)
                acc += double(acts.hidden.at(i, h)) * double(d_output.at(i, j));
            g.w2.at(h, j) = Real(acc);
        }
    }
    for (size_t j = 0; j < D; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < B; ++i) acc += double(d_output.at(i, j));
        g.b2[j] = Real(acc);
    }

    // Into the hidden layer: dA = dY * W2^T, then the ReLU mask.
    BasicMatrix<Real> d_pre_relu(B, H);
    for (size_t i = 0; i < B; ++i) {
        for (size_t h = 0; h < H; ++h) {
            double acc = 0.0;
            for (size_t j = 0; j < D; ++j)
                acc += double(d_output.at(i, j)) * double(net.w2.at(h, j));
            d_pre_relu.at(i, h) = acts.hidden.at(i, h) > Real(0) ? Real(acc) : Real(0);
        }
    }

    BasicMatrix<Real> d_z1(B, H);
    if (net.batchnorm) {
        if (acts.mode == ForwardMode::train) {
            // Batch statistics couple the rows:
            // dz_i = invstd/B * (B*dxhat_i - sum_j dxhat_j - xhat_i * sum_j dxhat_j xhat_j)
            for (size_t h = 0; h < H; ++h) {
                double dgamma = 0.0, dbeta = 0.0, sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (size_t i = 0; i < B; ++i) {
                    const double dout = double(d_pre_relu.at(i, h));
                    const double xh = double(acts.xhat.at(i, h));
                    dgamma += dout * xh;
                    dbeta += dout;
                    const double dxhat = dout * double(net.gamma[h]);
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xh;
                }
                g.gamma[h] = Real(dgamma);
                g.beta[h] = Real(dbeta);
                const double invstd = double(acts.invstd[h]);
                for (size_t i = 0; i < B; ++i) {
                    const double dxhat =
                        double(d_pre_relu.at(i, h)) * double(net.gamma[h]);
                    const double xh = double(acts.xhat.at(i, h));
                    d_z1.at(i, h) = Real(invstd / double(B) *
                                         (double(B) * dxhat - sum_dxhat - xh * sum_dxhat_xhat));
                }
            }
        } else {
            // Eval mode: running stats are constants, so the layer is a
            // per-feature affine map.
            for (size_t h = 0; h < H; ++h) {
                double dgamma = 0.0, dbeta = 0.0;
                const double scale = double(net.gamma[h]) * double(acts.invstd[h]);
                for (size_t i = 0; i < B; ++i) {
                    const double dout = double(d_pre_relu.at(i, h));
                    dgamma += dout * double(acts.xhat.at(i, h));
                    dbeta += dout;
                    d_z1.at(i, h) = Real(dout * scale);
                }
                g.gamma[h] = Real(dgamma);
                g.beta[h] = Real(dbeta);
            }
        }
    } else {
        d_z1 = d_pre_relu;
    }

    // Down-projection: dW1 = X^T * dZ1, db1 = column sums of dZ1.
    for (size_t k = 0; k < D; ++k) {
        for (size_t h = 0; h < H; ++h) {
            double acc = 0.0;
            for (size_t i = 0; i < B; ++i)
                acc += double(acts.input.at(i, k)) * double(d_z1.at(i, h));
            g.w1.at(k, h) = Real(acc);
        }
    }
    for (size_t h = 0; h < H; ++h) {
        double acc = 0.0;
        for (size_t i = 0; i < B; ++i) acc += double(d_z1.at(i, h));
        g.b1[h] = Real(acc);
    }
    return g;
}

template <typename Real>
BasicMatrix<Real> normalize_rows_copy(const BasicMatrix<Real>& m) {
    BasicMatrix<Real> out(m.rows, m.cols);
    for (size_t i = 0; i < m.rows; ++i) {
        double n = 0.0;
        for (size_t j = 0; j < m.cols; ++j) n += double(m.at(i, j)) * double(m.at(i, j));
        n = std::max(std::sqrt(n), kNormEps);
        for (size_t j = 0; j < m.cols; ++j) out.at(i, j) = Real(double(m.at(i, j)) / n);
    }
    return out;
}

namespace {

// d(loss)/d(raw row) from d(loss)/d(normalized row) via the projection
// Jacobian (I - n n^T)/||y||; below the clamp the map is y/eps, so the
// Jacobian is I/eps.
template <typename Real>
void normalization_backward_row(std::span<const Real> raw, std::span<const Real> unit,
                                std::span<const double> d_unit, std::span<Real> d_raw) {
    double norm = 0.0;
    for (const Real x : raw) norm += double(x) * double(x);
    norm = std::sqrt(norm);
    if (norm >= kNormEps) {
        double proj = 0.0;
        for (size_t j = 0; j < raw.size(); ++j) proj += double(unit[j]) * d_unit[j];
        for (size_t j = 0; j < raw.size(); ++j)
            d_raw[j] = Real((d_unit[j] - double(unit[j]) * proj) / norm);
    } else {
        for (size_t j = 0; j < raw.size(); ++j) d_raw[j] = Real(d_unit[j] / kNormEps);
    }
}

}  // namespace

template <typename Real>
LossValue<Real> ce_loss(const AdapterNet<Real>& net, const BasicMatrix<Real>& batch,
                        const std::vector<int>& labels, const BasicMatrix<Real>& class_matrix,
                        const LossConfig& cfg, ForwardMode mode) {
    if (labels.size() != batch.rows)
        throw ShapeMismatchError("labels size " + std::to_string(labels.size()) + " vs batch " +
                                 std::to_string(batch.rows));
    if (class_matrix.cols != net.dim)
        throw ShapeMismatchError("class matrix dim " + std::to_string(class_matrix.cols) +
                                 " vs adapter dim " + std::to_string(net.dim));

    LossValue<Real> result;
    result.acts = adapter_forward(net, batch, mode);
    const auto unit = normalize_rows_copy(result.acts.output);

    const size_t B = batch.rows;
    const size_t C = class_matrix.rows;
    const double tau = double(cfg.ce_temperature);

    BasicMatrix<Real> d_output(B, net.dim);
    double total = 0.0;
    std::vector<double> logits(C), d_unit(net.dim);
    for (size_t i = 0; i < B; ++i) {
        for (size_t c = 0; c < C; ++c) {
            double dot = 0.0;
            for (size_t j = 0; j < net.dim; ++j)
                dot += double(unit.at(i, j)) * double(class_matrix.at(c, j));
            logits[c] = dot / tau;
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (const double l : logits) sum += std::exp(l - mx);
        const double lse = mx + std::log(sum);
        total += lse - logits[size_t(labels[i])];

        // dL/dlogit_c = (softmax_c - onehot_c)/B; pull back through V-hat/tau.
        std::fill(d_unit.begin(), d_unit.end(), 0.0);
        for (size_t c = 0; c < C; ++c) {
            double dlogit = std::exp(logits[c] - lse);
            if (c == size_t(labels[i])) dlogit -= 1.0;
            dlogit /= double(B);
            const double scale = dlogit / tau;
            for (size_t j = 0; j < net.dim; ++j)
                d_unit[j] += scale * double(class_matrix.at(c, j));
        }
        normalization_backward_row<Real>(result.acts.output.row(i), unit.row(i), d_unit,
                                         d_output.row(i));
    }

    result.loss = total / double(B);
    result.grads = adapter_backward(net, result.acts, d_output);
    return result;
}

template <typename Real>
LossValue<Real> supcon_loss(const AdapterNet<Real>& net, std::span<const Real> anchor,
                            const BasicMatrix<Real>& positives,
                            const BasicMatrix<Real>& negatives, const LossConfig& cfg) {
    if (positives.rows < 1) throw EmptyPositivesError("supcon_loss needs at least one positive");
    if (anchor.size() != net.dim ||
        positives.cols != net.dim || (negatives.rows > 0 && negatives.cols != net.dim))
        throw ShapeMismatchError("supcon inputs disagree with adapter dim " +
                                 std::to_string(net.dim));

    const size_t P = positives.rows;
    const size_t M = negatives.rows;
    const size_t D = net.dim;

    // Anchor, positives, and negatives share one train-mode batch so the
    // batch statistics see every role.
    BasicMatrix<Real> batch(1 + P + M, D);
    std::copy(anchor.begin(), anchor.end(), batch.row(0).begin());
    for (size_t p = 0; p < P; ++p)
        std::copy(positives.row(p).begin(), positives.row(p).end(), batch.row(1 + p).begin());
    for (size_t m = 0; m < M; ++m)
        std::copy(negatives.row(m).begin(), negatives.row(m).end(),
                  batch.row(1 + P + m).begin());

    LossValue<Real> result;
    result.acts = adapter_forward(net, batch, ForwardMode::train);
    const auto unit = normalize_rows_copy(result.acts.output);

    const double tau = double(cfg.contrastive_temperature);
    const auto sim = [&](size_t row) {
        double dot = 0.0;
        for (size_t j = 0; j < D; ++j) dot += double(unit.at(0, j)) * double(unit.at(row, j));
        return dot / tau;
    };
    std::vector<double> s(P), t(M);
    for (size_t p = 0; p < P; ++p) s[p] = sim(1 + p);
    for (size_t m = 0; m < M; ++m) t[m] = sim(1 + P + m);

    // Per positive p: log Z_p = LSE(s_p, t_1..t_M); loss = mean_p (logZ_p - s_p).
    double total = 0.0;
    std::vector<double> d_s(P, 0.0), d_t(M, 0.0);
    for (size_t p = 0; p < P; ++p) {
        double mx = s[p];
        for (const double tm : t) mx = std::max(mx, tm);
        double sum = std::exp(s[p] - mx);
        for (const double tm : t) sum += std::exp(tm - mx);
        const double lse = mx + std::log(sum);
        total += lse - s[p];
        d_s[p] += (std::exp(s[p] - lse) - 1.0) / double(P);
        for (size_t m = 0; m < M; ++m) d_t[m] += std::exp(t[m] - lse) / double(P);
    }
    result.loss = total / double(P);

    // Similarity gradients into the normalized rows.
    BasicMatrix<double> d_unit(1 + P + M, D);
    for (size_t p = 0; p < P; ++p) {
        for (size_t j = 0; j < D; ++j) {
            d_unit.at(0, j) += d_s[p] * double(unit.at(1 + p, j)) / tau;
            d_unit.at(1 + p, j) += d_s[p] * double(unit.at(0, j)) / tau;
        }
    }
    for (size_t m = 0; m < M; ++m) {
        for (size_t j = 0; j < D; ++j) {
            d_unit.at(0, j) += d_t[m] * double(unit.at(1 + P + m, j)) / tau;
            d_unit.at(1 + P + m, j) += d_t[m] * double(unit.at(0, j)) / tau;
        }
    }

    BasicMatrix<Real> d_output(1 + P + M, D);
    for (size_t r = 0; r < d_output.rows; ++r)
        normalization_backward_row<Real>(result.acts.output.row(r), unit.row(r), d_unit.row(r),
                                         d_output.row(r));

    result.grads = adapter_backward(net, result.acts, d_output);
    return result;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

GradCheckFixture make_grad_check_fixture(LossKind kind, Rng& rng) {
    GradCheckFixture f;
    f.kind = kind;
    const size_t D = 2 + size_t(rng.uniform_below(7));  // 2..8
    const size_t H = 2 + size_t(rng.uniform_below(3));  // 2..4
    f.net = AdapterNet<double>::init(D, H, rng);
    // Non-trivial batchnorm state so eval-mode terms are exercised too.
    for (size_t h = 0; h < H; ++h) {
        f.net.gamma[h] = 0.5 + rng.next_double();
        f.net.beta[h] = rng.gaussian() * 0.2;
        f.net.running_mean[h] = rng.gaussian() * 0.2;
        f.net.running_var[h] = 0.5 + rng.next_double();
    }
    f.cfg.ce_temperature = 0.25f;
    f.cfg.contrastive_temperature = 0.25f;

    const auto fill = [&rng](BasicMatrix<double>& m) {
        for (auto& x : m.data) x = rng.gaussian();
    };
    if (kind == LossKind::ce) {
        const size_t B = 2 + size_t(rng.uniform_below(5));  // 2..6
        const size_t C = 2 + size_t(rng.uniform_below(3));  // 2..4
        f.batch = BasicMatrix<double>(B, D);
        fill(f.batch);
        f.class_matrix = BasicMatrix<double>(C, D);
        fill(f.class_matrix);
        for (size_t c = 0; c < C; ++c) {
            double n = 0.0;
            for (size_t j = 0; j < D; ++j) n += f.class_matrix.at(c, j) * f.class_matrix.at(c, j);
            n = std::sqrt(n);
            for (size_t j = 0; j < D; ++j) f.class_matrix.at(c, j) /= n;
        }
        for (size_t i = 0; i < B; ++i) f.labels.push_back(int(rng.uniform_below(C)));
    } else {
        const size_t P = 1 + size_t(rng.uniform_below(3));  // 1..3
        const size_t M = 1 + size_t(rng.uniform_below(3));  // 1..3
        f.anchor.resize(D);
        for (auto& x : f.anchor) x = rng.gaussian();
        f.positives = BasicMatrix<double>(P, D);
        fill(f.positives);
        f.negatives = BasicMatrix<double>(M, D);
        fill(f.negatives);
    }
    return f;
}

namespace {

double fixture_loss(const GradCheckFixture& f, const AdapterNet<double>& net) {
    if (f.kind == LossKind::ce)
        return ce_loss(net, f.batch, f.labels, f.class_matrix, f.cfg).loss;
    return supcon_loss(net, std::span<const double>(f.anchor), f.positives, f.negatives, f.cfg)
        .loss;
}

}  // namespace

double grad_check(const GradCheckFixture& f, double epsilon) {
    const AdapterGrads<double> analytic =
        f.kind == LossKind::ce
            ? ce_loss(f.net, f.batch, f.labels, f.class_matrix, f.cfg).grads
            : supcon_loss(f.net, std::span<const double>(f.anchor), f.positives, f.negatives,
                          f.cfg)
                  .grads;

    double worst = 0.0;
    const auto check_field = [&](std::vector<double> AdapterNet<double>::* field,
                                 const std::vector<double>& grad) {
        AdapterNet<double> net = f.net;
        for (size_t i = 0; i < grad.size(); ++i) {
            const double saved = (net.*field)[i];
            (net.*field)[i] = saved + epsilon;
            const double hi = fixture_loss(f, net);
            (net.*field)[i] = saved - epsilon;
            const double lo = fixture_loss(f, net);
            (net.*field)[i] = saved;
            const double fd = (hi - lo) / (2.0 * epsilon);
            const double ga = grad[i];
            const double rel = std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd));
            worst = std::max(worst, rel);
        }
    };
    const auto check_matrix = [&](BasicMatrix<double> AdapterNet<double>::* field,
                                  const BasicMatrix<double>& grad) {
        AdapterNet<double> net = f.net;
        for (size_t i = 0; i < grad.data.size(); ++i) {
            const double saved = (net.*field).data[i];
            (net.*field).data[i] = saved + epsilon;
            const double hi = fixture_loss(f, net);
            (net.*field).data[i] = saved - epsilon;
            const double lo = fixture_loss(f, net);
            (net.*field).data[i] = saved;
            const double fd = (hi - lo) / (2.0 * epsilon);
            const double ga = grad.data[i];
            const double rel = std::abs(ga - fd) / std::max(1e-8, std::abs(ga) + std::abs(fd));
            worst = std::max(worst, rel);
        }
    };

    check_matrix(&AdapterNet<double>::w1, analytic.w1);
    check_field(&AdapterNet<double>::b1, analytic.b1);
    check_field(&AdapterNet<double>::gamma, analytic.gamma);
    check_field(&AdapterNet<double>::beta, analytic.beta);
    check_matrix(&AdapterNet<double>::w2, analytic.w2);
    check_field(&AdapterNet<double>::b2, analytic.b2);
    return worst;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

void save_adapter_checkpoint(const AdapterParams& params, const std::filesystem::path& path) {
    ckpt::Header header;
    header.add("format_version", "1");
    header.add("kind", "adapter");
    header.add("dim", std::to_string(params.dim));
    header.add("hidden", std::to_string(params.hidden));
    header.add("batchnorm", params.batchnorm ? "1" : "0");
    header.add("bn_momentum", ckpt::hexfloat(params.bn_momentum));
    header.add("bn_eps", ckpt::hexfloat(params.bn_eps));

    std::vector<char> payload;
    ckpt::append_floats(payload, params.w1.data.data(), params.w1.data.size());
    ckpt::append_floats(payload, params.b1.data(), params.b1.size());
    ckpt::append_floats(payload, params.gamma.data(), params.gamma.size());
    ckpt::append_floats(payload, params.beta.data(), params.beta.size());
    ckpt::append_floats(payload, params.running_mean.data(), params.running_mean.size());
    ckpt::append_floats(payload, params.running_var.data(), params.running_var.size());
    ckpt::append_floats(payload, params.w2.data.data(), params.w2.data.size());
    ckpt::append_floats(payload, params.b2.data(), params.b2.size());
    ckpt::write_checkpoint(path, std::move(header), payload);
}

AdapterParams load_adapter_checkpoint(const std::filesystem::path& path) {
    const auto loaded = ckpt::read_checkpoint(path, "adapter");
    AdapterParams p;
    p.dim = size_t(std::stoull(loaded.fields.at("dim")));
    p.hidden = size_t(std::stoull(loaded.fields.at("hidden")));
    p.batchnorm = loaded.fields.at("batchnorm") == "1";
    p.bn_momentum = ckpt::parse_hexfloat(loaded.fields.at("bn_momentum"), "bn_momentum");
    p.bn_eps = ckpt::parse_hexfloat(loaded.fields.at("bn_eps"), "bn_eps");

    ckpt::PayloadReader reader(loaded.payload);
    p.w1 = Matrix(p.dim, p.hidden);
    p.w1.data = reader.take(p.dim * p.hidden, "w1");
    p.b1 = reader.take(p.hidden, "b1");
    p.gamma = reader.take(p.hidden, "gamma");
    p.beta = reader.take(p.hidden, "beta");
    p.running_mean = reader.take(p.hidden, "running_mean");
    p.running_var = reader.take(p.hidden, "running_var");
    p.w2 = Matrix(p.hidden, p.dim);
    p.w2.data = reader.take(p.hidden * p.dim, "w2");
    p.b2 = reader.take(p.dim, "b2");
    reader.expect_done("adapter checkpoint");
    return p;
}

// Explicit instantiations: f32 for training, f64 for gradient checking.
template struct AdapterNet<float>;
template struct AdapterNet<double>;
template struct AdapterGrads<float>;
template struct AdapterGrads<double>;
template AdapterActivations<float> adapter_forward(const AdapterNet<float>&, const Matrix&,
                                                   ForwardMode);
template AdapterActivations<double> adapter_forward(const AdapterNet<double>&, const MatrixD&,
                                                    ForwardMode);
template AdapterGrads<float> adapter_backward(const AdapterNet<float>&,
                                              const AdapterActivations<float>&, const Matrix&);
template AdapterGrads<double> adapter_backward(const AdapterNet<double>&,
                                               const AdapterActivations<double>&, const MatrixD&);
template Matrix normalize_rows_copy(const Matrix&);
template MatrixD normalize_rows_copy(const MatrixD&);
template LossValue<float> ce_loss(const AdapterNet<float>&, const Matrix&,
                                  const std::vector<int>&, const Matrix&, const LossConfig&,
                                  ForwardMode);
template LossValue<double> ce_loss(const AdapterNet<double>&, const MatrixD&,
                                   const std::vector<int>&, const MatrixD&, const LossConfig&,
                                   ForwardMode);
template LossValue<float> supcon_loss(const AdapterNet<float>&, std::span<const float>,
                                      const Matrix&, const Matrix&, const LossConfig&);
template LossValue<double> supcon_loss(const AdapterNet<double>&, std::span<const double>,
                                       const MatrixD&, const MatrixD&, const LossConfig&);

}  // namespace robustadapt
