#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "robustadapt/matrix.hpp"
#include "robustadapt/zeroshot.hpp"

namespace robustadapt {

/// Plain linear classifier: logits = weights . u + bias. Zero-shot-derived
/// heads carry a zero bias.
struct LinearHead {
    Matrix weights;           // C x D
    std::vector<float> bias;  // C

    bool operator==(const LinearHead&) const = default;
};

/// Argmax of logits, ties to the lowest class id; probs are the plain
/// softmax of the logits. `normalize_input` l2-normalizes u first (the
/// WiSE-FT evaluation convention).
Prediction linear_predict(const LinearHead& head, std::span<const float> u, bool normalize_input);

/// Same checkpoint container as the adapter (header + f32 blobs + checksum).
void save_linear_head_checkpoint(const LinearHead& head, const std::filesystem::path& path);
LinearHead load_linear_head_checkpoint(const std::filesystem::path& path);

}  // namespace robustadapt
