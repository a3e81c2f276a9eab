#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lga/model.hpp"

namespace lga {

/// Everything needed to resume training bit-exactly or run inference:
/// model config + weights, the step counter, the seed all training
/// randomness derives from, optimizer moments, and the label space.
struct Checkpoint {
    int format_version = 1;
    ModelParams params;
    long step = 0;
    std::uint64_t rng_state = 0; // training seed; batch order and augment
                                 // draws are pure functions of (seed, epoch, index)
    int image_size = 448;
    std::vector<std::string> class_names;

    std::string optimizer;      // "", "adam" or "momentum"
    std::vector<Tensor> opt_m;  // adam first moment / momentum velocity
    std::vector<Tensor> opt_v;  // adam second moment
    long opt_updates = 0;       // adam bias-correction counter
};

/// Writes to a temp file and renames into place. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Header JSON only (no tensor payload); used by the inspect command.
std::string checkpoint_header(const std::string& path);

} // namespace lga
