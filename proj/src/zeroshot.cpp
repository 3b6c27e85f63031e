#include "robustadapt/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustadapt/errors.hpp"
#include "robustadapt/numerics.hpp"

namespace robustadapt {

ZeroShotHead ZeroShotHead::from_bundle(const EmbeddingBundle& b, float temperature) {
    if (temperature <= 0.f) throw InvalidSpecError("temperature must be > 0");
    ZeroShotHead head;
    head.class_matrix = b.class_embeds;
    l2_normalize_rows(head.class_matrix);
    head.temperature = temperature;
    return head;
}

Prediction zeroshot_predict(const ZeroShotHead& head, std::span<const float> u) {
    if (u.size() != head.class_matrix.cols)
        throw ShapeMismatchError("sample dim " + std::to_string(u.size()) + " vs head dim " +
                                 std::to_string(head.class_matrix.cols));
    std::vector<float> logits(head.class_matrix.rows);
    for (size_t c = 0; c < head.class_matrix.rows; ++c)
        logits[c] = cosine_sim(u, head.class_matrix.row(c)) / head.temperature;
    Prediction p;
    p.probs = softmax(logits);
    p.label = int(argmax_lowest(logits));
    return p;
}

std::vector<Prediction> zeroshot_predict_all(const ZeroShotHead& head, const Matrix& samples) {
    std::vector<Prediction> out;
    out.reserve(samples.rows);
    for (size_t i = 0; i < samples.rows; ++i) out.push_back(zeroshot_predict(head, samples.row(i)));
    return out;
}

Prediction group_prompt_predict(const EmbeddingBundle& b, std::span<const float> u,
                                float temperature) {
    if (!b.group_prompt_embeds)
        throw MissingGroupPromptsError("bundle carries no group prompt embeddings");
    const Matrix& prompts = *b.group_prompt_embeds;
    if (u.size() != prompts.cols)
        throw ShapeMismatchError("sample dim " + std::to_string(u.size()) + " vs prompt dim " +
                                 std::to_string(prompts.cols));

    std::vector<float> class_score(b.n_classes(), -std::numeric_limits<float>::infinity());
    for (size_t r = 0; r < prompts.rows; ++r) {
        const float sim = cosine_sim(u, prompts.row(r));
        const int cls = b.group_prompt_info[r].class_id;
        class_score[cls] = std::max(class_score[cls], sim);
    }
    for (auto& s : class_score)
        if (!std::isfinite(s)) s = -1.f;  // class without prompts scores below any cosine

    std::vector<float> logits(class_score.size());
    for (size_t c = 0; c < class_score.size(); ++c) logits[c] = class_score[c] / temperature;
    Prediction p;
    p.probs = softmax(logits);
    p.label = int(argmax_lowest(logits));
    return p;
}

PseudoLabels pseudolabel_zeroshot(const ZeroShotHead& head, const EmbeddingBundle& b,
                                  const std::vector<size_t>& indices) {
    PseudoLabels out;
    out.labels.reserve(indices.size());
    out.correct.reserve(indices.size());
    for (const size_t i : indices) {
        const auto p = zeroshot_predict(head, b.samples.row(i));
        out.labels.push_back(p.label);
        out.correct.push_back(p.label == b.class_labels[i] ? 1 : 0);
    }
    return out;
}

namespace {

double sq_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

struct LloydRun {
    std::vector<int> assignment;
    Matrix centers;
    double sse = 0.0;
    std::vector<double> sse_history;
};

LloydRun lloyd_once(const Matrix& points, size_t k, size_t iters, Rng& rng) {
    const size_t n = points.rows;
    const size_t d = points.cols;

    // k-means++ seeding: first center uniform, then D^2-weighted picks.
    Matrix centers(k, d);
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    {
        const size_t first = size_t(rng.uniform_below(n));
        std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    }
    for (size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            dist2[i] = std::min(dist2[i], sq_distance(points.row(i), centers.row(c - 1)));
            total += dist2[i];
        }
        size_t pick = 0;
        if (total <= 0.0) {
            // All points coincide with chosen centers; pick uniformly and let
            // the empty-cluster check below report the degeneracy.
            pick = size_t(rng.uniform_below(n));
        } else {
            const double target = rng.next_double() * total;
            double acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
    }

    LloydRun run;
    run.assignment.assign(n, 0);
    for (size_t it = 0; it < iters; ++it) {
        // Assignment step, ties to the lowest cluster id.
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (size_t c = 0; c < k; ++c) {
                const double d2 = sq_distance(points.row(i), centers.row(c));
                if (d2 < best) {
                    best = d2;
                    best_c = int(c);
                }
            }
            run.assignment[i] = best_c;
            sse += best;
        }
        run.sse_history.push_back(sse);
        if (run.sse_history.size() >= 2 &&
            run.sse_history[run.sse_history.size() - 2] <= sse + 1e-12) {
            break;  // converged
        }

        // Update step; empty clusters keep their previous center.
        Matrix sums(k, d);
        std::vector<size_t> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            const int c = run.assignment[i];
            counts[c]++;
            auto srow = sums.row(c);
            const auto prow = points.row(i);
            for (size_t j = 0; j < d; ++j) srow[j] += prow[j];
        }
        for (size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto crow = centers.row(c);
            const auto srow = sums.row(c);
            for (size_t j = 0; j < d; ++j) crow[j] = float(double(srow[j]) / double(counts[c]));
        }
    }
    run.centers = std::move(centers);
    run.sse = run.sse_history.back();
    return run;
}

}  // namespace

KMeansResult kmeans_cluster(const Matrix& points, size_t k, size_t iters, size_t restarts,
                            Rng& rng) {
    if (k < 1 || points.rows < k)
        throw InvalidSpecError("k-means needs k >= 1 and at least k points");
    if (iters < 1 || restarts < 1) throw InvalidSpecError("iters and restarts must be >= 1");

    LloydRun best;
    bool have_best = false;
    for (size_t r = 0; r < restarts; ++r) {
        LloydRun run = lloyd_once(points, k, iters, rng);
        if (!have_best || run.sse < best.sse) {
            best = std::move(run);
            have_best = true;
        }
    }

    std::vector<size_t> counts(k, 0);
    for (const int c : best.assignment) counts[c]++;
    for (size_t c = 0; c < k; ++c)
        if (counts[c] == 0)
            throw DegenerateClusteringError("cluster " + std::to_string(c) +
                                            " is empty; points may be (near-)identical");

    KMeansResult out;
    out.assignment = std::move(best.assignment);
    out.centers = std::move(best.centers);
    out.sse = best.sse;
    out.sse_history = std::move(best.sse_history);
    return out;
}

PseudoLabels pseudolabel_kmeans(const ZeroShotHead& head, const EmbeddingBundle& b,
                                const std::vector<size_t>& indices, size_t iters, size_t restarts,
                                Rng& rng) {
    const size_t k = b.n_classes();
    Matrix points(indices.size(), b.dim);
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy(b.samples.row(indices[i]).begin(), b.samples.row(indices[i]).end(),
                  points.row(i).begin());

    const auto clusters = kmeans_cluster(points, k, iters, restarts, rng);

    // Majority zero-shot prediction per cluster decides its class.
    std::vector<std::vector<size_t>> votes(k, std::vector<size_t>(k, 0));
    for (size_t i = 0; i < indices.size(); ++i) {
        const auto p = zeroshot_predict(head, b.samples.row(indices[i]));
        votes[clusters.assignment[i]][p.label]++;
    }
    std::vector<int> cluster_class(k, 0);
    for (size_t c = 0; c < k; ++c) {
        size_t best = 0;
        for (size_t y = 1; y < k; ++y)
            if (votes[c][y] > votes[c][best]) best = y;
        cluster_class[c] = int(best);
    }

    PseudoLabels out;
    out.labels.reserve(indices.size());
    out.correct.reserve(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        const int y = cluster_class[clusters.assignment[i]];
        out.labels.push_back(y);
        out.correct.push_back(y == b.class_labels[indices[i]] ? 1 : 0);
    }
    return out;
}

}  // namespace robustadapt
