#include "robustadapt/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "robustadapt/errors.hpp"

namespace robustadapt {

namespace {

void require_finite(std::span<const float> v, const char* what) {
    if (!detail::all_finite(v)) throw NonFiniteError(std::string(what) + " contains NaN/Inf");
}

}  // namespace

std::vector<float> l2_normalize(std::span<const float> v, float eps) {
    require_finite(v, "l2_normalize input");
    const double n = std::max(detail::norm(v), double(eps));
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = float(double(v[i]) / n);
    return out;
}

void l2_normalize_rows(Matrix& m, float eps) {
    for (size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        require_finite(row, "l2_normalize_rows input");
        const double n = std::max(detail::norm(std::span<const float>(row)), double(eps));
        for (auto& x : row) x = float(double(x) / n);
    }
}

float cosine_sim(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw ShapeMismatchError("cosine_sim lengths " + std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()));
    require_finite(a, "cosine_sim lhs");
    require_finite(b, "cosine_sim rhs");
    const double na = std::max(detail::norm(a), kNormEps);
    const double nb = std::max(detail::norm(b), kNormEps);
    return float(detail::dot(a, b) / (na * nb));
}

std::vector<float> softmax(std::span<const float> logits) {
    require_finite(logits, "softmax input");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    std::vector<double> e(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(double(logits[i]) - m);
        sum += e[i];
    }
    std::vector<float> out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) out[i] = float(e[i] / sum);
    return out;
}

float spectral_norm(const Matrix& m, size_t iters, Rng& rng) {
    if (m.rows == 0 || m.cols == 0) throw ShapeMismatchError("spectral_norm of empty matrix");
    if (!detail::all_finite(std::span<const float>(m.data))) {
        throw NonFiniteError("spectral_norm input contains NaN/Inf");
    }

    std::vector<double> v(m.cols);
    for (auto& x : v) x = rng.gaussian();
    double vn = 0.0;
    for (double x : v) vn += x * x;
    vn = std::sqrt(vn);
    if (vn == 0.0) v[0] = 1.0;
    else
        for (auto& x : v) x /= vn;

    std::vector<double> av(m.rows), atav(m.cols);
    double sigma = 0.0;
    for (size_t it = 0; it < iters; ++it) {
        for (size_t r = 0; r < m.rows; ++r) {
            double acc = 0.0;
            const float* row = m.data.data() + r * m.cols;
            for (size_t c = 0; c < m.cols; ++c) acc += double(row[c]) * v[c];
            av[r] = acc;
        }
        double avn = 0.0;
        for (double x : av) avn += x * x;
        sigma = std::sqrt(avn);
        if (sigma == 0.0) return 0.f;  // v in the null space; norm estimate gives up at 0

        std::fill(atav.begin(), atav.end(), 0.0);
        for (size_t r = 0; r < m.rows; ++r) {
            const float* row = m.data.data() + r * m.cols;
            for (size_t c = 0; c < m.cols; ++c) atav[c] += double(row[c]) * av[r];
        }
        double n2 = 0.0;
        for (double x : atav) n2 += x * x;
        n2 = std::sqrt(n2);
        for (size_t c = 0; c < m.cols; ++c) v[c] = atav[c] / n2;
    }
    return float(sigma);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeMismatchError("matmul " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                 " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix out(a.rows, b.cols);
    for (size_t i = 0; i < a.rows; ++i) {
        for (size_t j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < a.cols; ++k) acc += double(a.at(i, k)) * double(b.at(k, j));
            out.at(i, j) = float(acc);
        }
    }
    return out;
}

std::vector<float> matvec(const Matrix& a, std::span<const float> x) {
    if (a.cols != x.size())
        throw ShapeMismatchError("matvec " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                 " * vec" + std::to_string(x.size()));
    std::vector<float> out(a.rows);
    for (size_t i = 0; i < a.rows; ++i) out[i] = float(detail::dot(a.row(i), x));
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (size_t i = 0; i < a.rows; ++i)
        for (size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

size_t argmax_lowest(std::span<const float> v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

}  // namespace robustadapt
