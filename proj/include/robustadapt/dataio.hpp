#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "robustadapt/matrix.hpp"
#include "robustadapt/rng.hpp"

namespace robustadapt {

enum class Split : uint8_t { train = 0, val = 1, test = 2 };

const char* split_name(Split s);
Split parse_split(const std::string& s);

struct GroupPromptInfo {
    int class_id = 0;
    int group_id = 0;
    bool operator==(const GroupPromptInfo&) const = default;
};

/// Fixed, precomputed embeddings plus per-sample class/group/split labels.
/// Immutable after load/generate; share freely across threads.
struct EmbeddingBundle {
    size_t dim = 0;
    Matrix samples;                 // N x dim sample embeddings
    Matrix class_embeds;            // C x dim class (prompt) embeddings
    std::vector<int> class_labels;  // N
    std::vector<int> group_labels;  // N
    std::vector<Split> splits;      // N
    std::vector<std::string> class_names;
    std::vector<std::string> group_names;
    std::optional<Matrix> group_prompt_embeds;       // rows x dim
    std::vector<GroupPromptInfo> group_prompt_info;  // one entry per prompt row

    size_t n_samples() const { return samples.rows; }
    size_t n_classes() const { return class_embeds.rows; }
    size_t n_groups() const { return group_names.size(); }

    /// Throws InvalidSpec when a structural invariant is broken (label range,
    /// field lengths, all-zero sample rows, val/test groups missing in train).
    void validate() const;

    bool operator==(const EmbeddingBundle&) const = default;
};

enum class ShiftKind : uint8_t { confounder = 0, subclass = 1, data_source = 2 };

const char* shift_kind_name(ShiftKind k);
ShiftKind parse_shift_kind(const std::string& s);

/// Parameters of the synthetic group-shift generator. `minority_fraction` is
/// the train-split share of each non-majority group within a class; group 0
/// is the majority. Class prompts lean toward the majority group mean with
/// weight `spurious_mix`.
struct ShiftSpec {
    ShiftKind shift_kind = ShiftKind::confounder;
    size_t classes = 2;
    size_t groups_per_class = 2;
    size_t dim = 64;
    float minority_fraction = 0.05f;
    float class_sep = 1.0f;
    float group_sep = 1.0f;
    float spurious_mix = 0.9f;
    float noise_sigma = 0.15f;
    size_t n_train = 1000;
    size_t n_val = 400;
    size_t n_test = 800;
    uint64_t seed = 0;

    void validate() const;  // throws InvalidSpec
};

/// Frozen fixture specs: "s1" (confounder, imbalanced), "s2" (subclass,
/// balanced), "s3" (data-source, imbalanced).
ShiftSpec preset_shift_spec(const std::string& name);

/// Gaussian group clusters around unit-norm means; samples are re-normalized
/// after noise. Train group sizes follow minority_fraction; val and test are
/// group-balanced. Deterministic given spec.seed.
EmbeddingBundle generate_synthetic(const ShiftSpec& spec);

/// Directory format: manifest.txt (key = value), embeddings.bin /
/// class_embeddings.bin (little-endian f32, row-major, no header),
/// labels.csv (`index,class,group,split`, LF), optional group_prompts.bin +
/// group_prompts.csv. Round-trips bit-exactly.
void save_bundle(const EmbeddingBundle& b, const std::filesystem::path& dir);
EmbeddingBundle load_bundle(const std::filesystem::path& dir);

/// Checksum over the bundle's files in fixed order; stamped into reports.
uint64_t bundle_checksum(const std::filesystem::path& dir);

/// Indices whose split matches, in stable row order.
std::vector<size_t> split_view(const EmbeddingBundle& b, Split split);

/// Shrinks the train split to n samples, keeping per-(class,group) counts
/// proportional (largest-remainder rounding, ties to the lower class then
/// group id) and every cell nonempty. Val/test untouched.
EmbeddingBundle subsample_preserving_ratios(const EmbeddingBundle& b, size_t n, Rng& rng);

}  // namespace robustadapt
