#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustadapt/dataio.hpp"
#include "robustadapt/zeroshot.hpp"

namespace robustadapt {

struct SamplingConfig {
    size_t num_positives = 512;   // P
    size_t num_negatives = 512;   // M
    size_t num_neighbors = 1024;  // M*, pool of nearest other-class samples
    uint64_t seed = 0;
    // Also require positives to be predicted differently from the anchor
    // (the stricter pseudocode filter); off by default.
    bool strict_positive_filter = false;
};

/// One anchor (pseudo-incorrect) with its sampled positives (same class,
/// pseudo-correct) and hard negatives (other class, near the anchor).
/// Indices are bundle row indices.
struct ContrastiveBatch {
    size_t anchor = 0;
    std::vector<size_t> positives;
    std::vector<size_t> negatives;
};

struct ContrastiveBatchSet {
    std::vector<ContrastiveBatch> batches;
    std::vector<std::string> warnings;  // e.g. anchors dropped for lack of positives
};

/// One batch per pseudo-incorrect train sample. Positives are drawn without
/// replacement when at least P candidates exist, with replacement otherwise.
/// Negatives are M draws (without replacement) from the M* train samples of
/// other classes nearest to the anchor by cosine over pretrained embeddings;
/// M* is clamped to the candidate count. Anchors whose class has no
/// pseudo-correct sample are dropped with a warning. Deterministic given
/// cfg.seed; per-anchor streams derive from (seed, anchor index).
ContrastiveBatchSet build_contrastive_batches(const EmbeddingBundle& b,
                                              const std::vector<size_t>& train_idx,
                                              const PseudoLabels& pseudo,
                                              const SamplingConfig& cfg);

/// Per class: pseudo-correct samples once each, plus the pseudo-incorrect
/// side upsampled with replacement to the correct count. Classes with an
/// empty side contribute the other side unexpanded.
std::vector<size_t> build_resampled_train(const EmbeddingBundle& b,
                                          const std::vector<size_t>& train_idx,
                                          const PseudoLabels& pseudo, Rng& rng);

/// Exact k nearest rows to `anchor_row` among rows whose label differs,
/// by descending cosine similarity, ties to the lower row index. Returns
/// fewer than k when fewer candidates exist.
std::vector<size_t> knn_other_class(const Matrix& samples, const std::vector<int>& labels,
                                    size_t anchor_row, size_t k);

}  // namespace robustadapt
