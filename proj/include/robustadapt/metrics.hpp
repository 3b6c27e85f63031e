#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robustadapt/adapter.hpp"
#include "robustadapt/matrix.hpp"

namespace robustadapt {

struct GroupCell {
    int class_id = 0;
    int group_id = 0;
    size_t n = 0;
    double accuracy = 0.0;
};

/// Per-(class, group) accuracy table plus the robustness summary. The
/// diagnostics are per class; classes with a single group report nullopt.
struct GroupReport {
    std::vector<GroupCell> per_group;  // sorted by (class, group)
    double average_accuracy = 0.0;     // sample-weighted
    double worst_group_accuracy = 0.0;
    double gap = 0.0;  // average - worst
    std::vector<std::optional<double>> alignment_per_class;
    std::vector<std::optional<double>> cross_group_cosine_per_class;
};

/// Accuracy fields only. Throws EmptyGroup when there are no samples.
GroupReport evaluate_groups(const std::vector<int>& predictions, const std::vector<int>& labels,
                            const std::vector<int>& groups);

/// Mean pairwise Euclidean distance between l2-normalized embeddings of the
/// given class across different groups. Throws InsufficientGroups when the
/// class has fewer than two populated groups.
double alignment_loss(const Matrix& embeddings, const std::vector<int>& labels,
                      const std::vector<int>& groups, int class_id);

/// Same pairs as alignment_loss, cosine similarity instead of distance.
double cross_group_cosine(const Matrix& embeddings, const std::vector<int>& labels,
                          const std::vector<int>& groups, int class_id);

/// Accuracy table plus per-class diagnostics over the same evaluation rows.
GroupReport full_group_report(const Matrix& embeddings, const std::vector<int>& predictions,
                              const std::vector<int>& labels, const std::vector<int>& groups,
                              size_t n_classes);

/// ||W2|| * max_h |gamma_h|/sqrt(running_var_h + eps) * ||W1||; spectral
/// norms by power iteration. ReLU is 1-Lipschitz and eval-mode batchnorm is
/// a diagonal affine map, so this upper-bounds the adapter's Lipschitz
/// constant (it is a bound, not an estimate of the tight constant).
double lipschitz_upper_bound(const AdapterParams& params);

/// Plain-text WG/Avg/Gap table with one row per (class, group) cell.
std::string render_table(const GroupReport& report,
                         const std::vector<std::string>& class_names = {},
                         const std::vector<std::string>& group_names = {});

}  // namespace robustadapt
