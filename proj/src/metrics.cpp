#include "robustadapt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "robustadapt/errors.hpp"
#include "robustadapt/numerics.hpp"

namespace robustadapt {

GroupReport evaluate_groups(const std::vector<int>& predictions, const std::vector<int>& labels,
                            const std::vector<int>& groups) {
    if (predictions.size() != labels.size() || groups.size() != labels.size())
        throw ShapeMismatchError("predictions, labels, and groups must be aligned");
    if (labels.empty()) throw EmptyGroupError("no samples to evaluate");

    std::map<std::pair<int, int>, std::pair<size_t, size_t>> cells;  // (correct, n)
    size_t total_correct = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        auto& [correct, n] = cells[{labels[i], groups[i]}];
        n++;
        if (predictions[i] == labels[i]) {
            correct++;
            total_correct++;
        }
    }

    GroupReport r;
    r.average_accuracy = double(total_correct) / double(labels.size());
    r.worst_group_accuracy = 1.0;
    for (const auto& [key, cell] : cells) {
        const double acc = double(cell.first) / double(cell.second);
        r.per_group.push_back({key.first, key.second, cell.second, acc});
        r.worst_group_accuracy = std::min(r.worst_group_accuracy, acc);
    }
    r.gap = r.average_accuracy - r.worst_group_accuracy;
    return r;
}

namespace {

// Collects normalized embeddings of one class bucketed by group; the two
// diagnostics share this cross-group pair walk.
template <typename PairFn>
double mean_over_cross_group_pairs(const Matrix& embeddings, const std::vector<int>& labels,
                                   const std::vector<int>& groups, int class_id, PairFn&& fn) {
    if (labels.size() != embeddings.rows || groups.size() != embeddings.rows)
        throw ShapeMismatchError("labels/groups must be aligned with embedding rows");

    std::map<int, std::vector<std::vector<float>>> by_group;
    for (size_t i = 0; i < embeddings.rows; ++i)
        if (labels[i] == class_id) by_group[groups[i]].push_back(l2_normalize(embeddings.row(i)));
    if (by_group.size() < 2)
        throw InsufficientGroupsError("class " + std::to_string(class_id) + " has " +
                                      std::to_string(by_group.size()) +
                                      " populated group(s); need at least 2");

    double total = 0.0;
    size_t pairs = 0;
    for (auto it = by_group.begin(); it != by_group.end(); ++it) {
        for (auto jt = std::next(it); jt != by_group.end(); ++jt) {
            for (const auto& a : it->second) {
                for (const auto& b : jt->second) {
                    total += fn(a, b);
                    ++pairs;
                }
            }
        }
    }
    return total / double(pairs);
}

}  // namespace

double alignment_loss(const Matrix& embeddings, const std::vector<int>& labels,
                      const std::vector<int>& groups, int class_id) {
    return mean_over_cross_group_pairs(
        embeddings, labels, groups, class_id,
        [](const std::vector<float>& a, const std::vector<float>& b) {
            double acc = 0.0;
            for (size_t j = 0; j < a.size(); ++j) {
                const double d = double(a[j]) - double(b[j]);
                acc += d * d;
            }
            return std::sqrt(acc);
        });
}

double cross_group_cosine(const Matrix& embeddings, const std::vector<int>& labels,
                          const std::vector<int>& groups, int class_id) {
    return mean_over_cross_group_pairs(
        embeddings, labels, groups, class_id,
        [](const std::vector<float>& a, const std::vector<float>& b) {
            return detail::dot(std::span<const float>(a), std::span<const float>(b));
        });
}

GroupReport full_group_report(const Matrix& embeddings, const std::vector<int>& predictions,
                              const std::vector<int>& labels, const std::vector<int>& groups,
                              size_t n_classes) {
    GroupReport r = evaluate_groups(predictions, labels, groups);
    r.alignment_per_class.resize(n_classes);
    r.cross_group_cosine_per_class.resize(n_classes);
    for (size_t c = 0; c < n_classes; ++c) {
        try {
            r.alignment_per_class[c] = alignment_loss(embeddings, labels, groups, int(c));
            r.cross_group_cosine_per_class[c] =
                cross_group_cosine(embeddings, labels, groups, int(c));
        } catch (const InsufficientGroupsError&) {
            // Single-group classes report not-applicable.
        }
    }
    return r;
}

double lipschitz_upper_bound(const AdapterParams& params) {
    Rng rng(0x11580b0u);  // fixed stream; the bound must be reproducible
    const double n1 = spectral_norm(params.w1, 200, rng);
    const double n2 = spectral_norm(params.w2, 200, rng);
    double bn_factor = 1.0;
    if (params.batchnorm) {
        bn_factor = 0.0;
        for (size_t h = 0; h < params.hidden; ++h) {
            const double s = std::abs(double(params.gamma[h])) /
                             std::sqrt(double(params.running_var[h]) + double(params.bn_eps));
            bn_factor = std::max(bn_factor, s);
        }
    }
    return n1 * bn_factor * n2;
}

std::string render_table(const GroupReport& report, const std::vector<std::string>& class_names,
                         const std::vector<std::string>& group_names) {
    const auto name = [](const std::vector<std::string>& names, int id) {
        return size_t(id) < names.size() ? names[id] : std::to_string(id);
    };
    std::string out = "class            group            n      acc(%)\n";
    char buf[160];
    for (const auto& cell : report.per_group) {
        std::snprintf(buf, sizeof buf, "%-16s %-16s %-6zu %6.1f\n",
                      name(class_names, cell.class_id).c_str(),
                      name(group_names, cell.group_id).c_str(), cell.n, cell.accuracy * 100.0);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "WG %.1f  Avg %.1f  Gap %.1f (pp)\n",
                  report.worst_group_accuracy * 100.0, report.average_accuracy * 100.0,
                  report.gap * 100.0);
    out += buf;
    return out;
}

}  // namespace robustadapt
