#include "robustadapt/sampling.hpp"

#include <algorithm>
#include <map>

#include "robustadapt/errors.hpp"
#include "robustadapt/numerics.hpp"

namespace robustadapt {

std::vector<size_t> knn_other_class(const Matrix& samples, const std::vector<int>& labels,
                                    size_t anchor_row, size_t k) {
    if (k < 1) throw InvalidSpecError("knn_other_class needs k >= 1");
    if (labels.size() != samples.rows)
        throw ShapeMismatchError("labels size " + std::to_string(labels.size()) + " vs samples " +
                                 std::to_string(samples.rows));

    const int anchor_label = labels[anchor_row];
    std::vector<std::pair<float, size_t>> scored;
    for (size_t i = 0; i < samples.rows; ++i) {
        if (labels[i] == anchor_label) continue;
        scored.emplace_back(cosine_sim(samples.row(anchor_row), samples.row(i)), i);
    }
    // Descending similarity, ties to the lower index.
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (scored.size() > k) scored.resize(k);

    std::vector<size_t> out;
    out.reserve(scored.size());
    for (const auto& [sim, idx] : scored) out.push_back(idx);
    return out;
}

ContrastiveBatchSet build_contrastive_batches(const EmbeddingBundle& b,
                                              const std::vector<size_t>& train_idx,
                                              const PseudoLabels& pseudo,
                                              const SamplingConfig& cfg) {
    if (pseudo.labels.size() != train_idx.size() || pseudo.correct.size() != train_idx.size())
        throw ShapeMismatchError("pseudo labels must be parallel to the train index list");
    if (cfg.num_positives < 1) throw InvalidSpecError("num_positives must be >= 1");
    if (cfg.num_negatives < 1 || cfg.num_negatives > cfg.num_neighbors)
        throw InvalidSpecError("need 1 <= num_negatives <= num_neighbors");

    // Gather the train view once; kNN and candidate filters run over it.
    Matrix train_samples(train_idx.size(), b.dim);
    std::vector<int> train_labels(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i) {
        std::copy(b.samples.row(train_idx[i]).begin(), b.samples.row(train_idx[i]).end(),
                  train_samples.row(i).begin());
        train_labels[i] = b.class_labels[train_idx[i]];
    }

    // Positive candidates per class: same ground-truth class, pseudo-correct.
    std::map<int, std::vector<size_t>> positives_by_class;  // local train positions
    for (size_t i = 0; i < train_idx.size(); ++i)
        if (pseudo.correct[i]) positives_by_class[train_labels[i]].push_back(i);

    ContrastiveBatchSet out;
    for (size_t i = 0; i < train_idx.size(); ++i) {
        if (pseudo.correct[i]) continue;  // anchors are the pseudo-incorrect samples
        const int cls = train_labels[i];

        auto candidates_it = positives_by_class.find(cls);
        std::vector<size_t> candidates =
            candidates_it == positives_by_class.end() ? std::vector<size_t>{}
                                                      : candidates_it->second;
        if (cfg.strict_positive_filter) {
            std::erase_if(candidates,
                          [&](size_t p) { return pseudo.labels[p] == pseudo.labels[i]; });
        }
        if (candidates.empty()) {
            out.warnings.push_back("anchor " + std::to_string(train_idx[i]) + " dropped: class " +
                                   std::to_string(cls) + " has no pseudo-correct samples");
            continue;
        }

        Rng rng = Rng::derive(cfg.seed, train_idx[i]);
        ContrastiveBatch batch;
        batch.anchor = train_idx[i];

        if (candidates.size() >= cfg.num_positives) {
            const auto picks =
                rng.sample_without_replacement(candidates.size(), cfg.num_positives);
            for (const size_t p : picks) batch.positives.push_back(train_idx[candidates[p]]);
        } else {
            for (size_t n = 0; n < cfg.num_positives; ++n)
                batch.positives.push_back(
                    train_idx[candidates[size_t(rng.uniform_below(candidates.size()))]]);
        }

        const auto pool = knn_other_class(train_samples, train_labels, i, cfg.num_neighbors);
        const size_t m = std::min(cfg.num_negatives, pool.size());
        const auto picks = rng.sample_without_replacement(pool.size(), m);
        for (const size_t p : picks) batch.negatives.push_back(train_idx[pool[p]]);

        out.batches.push_back(std::move(batch));
    }
    return out;
}

std::vector<size_t> build_resampled_train(const EmbeddingBundle& b,
                                          const std::vector<size_t>& train_idx,
                                          const PseudoLabels& pseudo, Rng& rng) {
    if (pseudo.labels.size() != train_idx.size() || pseudo.correct.size() != train_idx.size())
        throw ShapeMismatchError("pseudo labels must be parallel to the train index list");

    std::map<int, std::pair<std::vector<size_t>, std::vector<size_t>>> by_class;  // correct, wrong
    for (size_t i = 0; i < train_idx.size(); ++i) {
        auto& [correct, wrong] = by_class[b.class_labels[train_idx[i]]];
        (pseudo.correct[i] ? correct : wrong).push_back(train_idx[i]);
    }

    std::vector<size_t> out;
    for (const auto& [cls, sides] : by_class) {
        const auto& [correct, wrong] = sides;
        out.insert(out.end(), correct.begin(), correct.end());
        if (wrong.empty()) continue;
        if (correct.empty()) {
            // Nothing to match against; pass the incorrect side through.
            out.insert(out.end(), wrong.begin(), wrong.end());
            continue;
        }
        for (size_t n = 0; n < correct.size(); ++n)
            out.push_back(wrong[size_t(rng.uniform_below(wrong.size()))]);
    }
    return out;
}

}  // namespace robustadapt
