#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "robustadapt/dataio.hpp"
#include "robustadapt/matrix.hpp"
#include "robustadapt/rng.hpp"

namespace robustadapt {

/// Frozen linear classifier over normalized class embeddings. Rows of
/// class_matrix are unit-norm; probabilities come from cosine similarities
/// scaled by 1/temperature.
struct ZeroShotHead {
    Matrix class_matrix;  // C x D, rows unit-norm
    float temperature = 0.01f;

    static ZeroShotHead from_bundle(const EmbeddingBundle& b, float temperature = 0.01f);
};

struct Prediction {
    std::vector<float> probs;  // sums to 1
    int label = 0;             // argmax, ties to the lowest class id
};

Prediction zeroshot_predict(const ZeroShotHead& head, std::span<const float> u);
std::vector<Prediction> zeroshot_predict_all(const ZeroShotHead& head, const Matrix& samples);

/// Classifies against every (class, group) prompt embedding; the class score
/// is the max cosine over that class's prompts. Throws MissingGroupPrompts
/// when the bundle carries none.
Prediction group_prompt_predict(const EmbeddingBundle& b, std::span<const float> u,
                                float temperature);

/// Proxy labels over a set of sample rows, parallel to `indices`.
struct PseudoLabels {
    std::vector<int> labels;       // predicted class per index
    std::vector<uint8_t> correct;  // label == ground truth
};

PseudoLabels pseudolabel_zeroshot(const ZeroShotHead& head, const EmbeddingBundle& b,
                                  const std::vector<size_t>& indices);

struct KMeansResult {
    std::vector<int> assignment;
    Matrix centers;
    double sse = 0.0;
    std::vector<double> sse_history;  // per Lloyd iteration of the winning restart
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` by SSE.
/// Throws DegenerateClustering when a cluster ends up empty.
KMeansResult kmeans_cluster(const Matrix& points, size_t k, size_t iters, size_t restarts,
                            Rng& rng);

/// K-means with k = number of classes, clusters mapped to classes by the
/// majority zero-shot prediction (ties to the lowest class id).
PseudoLabels pseudolabel_kmeans(const ZeroShotHead& head, const EmbeddingBundle& b,
                                const std::vector<size_t>& indices, size_t iters, size_t restarts,
                                Rng& rng);

}  // namespace robustadapt
