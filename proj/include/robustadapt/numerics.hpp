#pragma once

#include <span>
#include <vector>

#include "robustadapt/matrix.hpp"
#include "robustadapt/rng.hpp"

namespace robustadapt {

/// Epsilon used to clamp vector norms before division. Zero vectors
/// normalize to zero instead of erroring so training stays total when an
/// adapter output transiently vanishes.
inline constexpr double kNormEps = 1e-12;

namespace detail {

/// Dot product with f64 accumulation regardless of storage type.
template <typename T>
double dot(std::span<const T> a, std::span<const T> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
    return acc;
}

template <typename T>
double norm(std::span<const T> v) {
    double acc = 0.0;
    for (const T x : v) acc += double(x) * double(x);
    return std::sqrt(acc);
}

template <typename T>
bool all_finite(std::span<const T> v) {
    for (const T x : v) {
        if (!std::isfinite(double(x))) return false;
    }
    return true;
}

}  // namespace detail

/// v / max(||v||, eps). Throws NonFinite on NaN/Inf input.
std::vector<float> l2_normalize(std::span<const float> v, float eps = float(kNormEps));

/// In-place row-wise l2 normalization.
void l2_normalize_rows(Matrix& m, float eps = float(kNormEps));

/// <a,b> / (max(||a||,eps) * max(||b||,eps)). Throws NonFinite on NaN/Inf,
/// ShapeMismatch on length mismatch.
float cosine_sim(std::span<const float> a, std::span<const float> b);

/// Max-subtracted softmax; outputs sum to 1 and preserve the argmax.
std::vector<float> softmax(std::span<const float> logits);

/// Largest-singular-value estimate by power iteration on A^T A, started from
/// a random unit vector. The estimate is monotone nondecreasing in iters.
float spectral_norm(const Matrix& m, size_t iters, Rng& rng);

Matrix matmul(const Matrix& a, const Matrix& b);
std::vector<float> matvec(const Matrix& a, std::span<const float> x);
Matrix transpose(const Matrix& a);

/// Index of the strictly greatest entry; ties resolve to the lowest index.
size_t argmax_lowest(std::span<const float> v);

}  // namespace robustadapt
