#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "inknet/tensor.hpp"

namespace inknet::tensornet {

// Checkpoint container: magic "SSMPNET1", a text manifest of key=value lines,
// then named float32 tensors. The writer is deterministic, so save-load-save
// round trips are byte identical.
struct CheckpointData {
    std::map<std::string, std::string> manifest;  // sorted keys, no newlines in values
    std::vector<std::pair<std::string, Tensor<float>>> tensors;

    const Tensor<float>* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }
};

void save_checkpoint(const CheckpointData& ckpt, const std::string& path);
CheckpointData load_checkpoint(const std::string& path);  // throws naming the bad field

}  // namespace inknet::tensornet
