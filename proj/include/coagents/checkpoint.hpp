#pragma once

#include <map>
#include <string>
#include <vector>

#include "coagents/model.hpp"

namespace coagents::nn {

// Adam moment buffers plus the step counter, so interrupted training resumes
// with the exact learning-rate schedule position.
struct OptimizerState {
    long long step = 0;  // completed optimizer steps
    std::map<std::string, std::vector<double>> m;
    std::map<std::string, std::vector<double>> v;
};

// JSON dump keyed by parameter name with shapes, the ModelConfig, and the
// move-kind table (so stale kind indices are caught at load time). Doubles
// round-trip exactly. The optimizer block is written only when given.
void save_checkpoint(const std::string& path, const Model& model,
                     const OptimizerState* opt = nullptr);

// Rebuilds the model from the stored config and weights; fills *opt when the
// file carries optimizer state and opt is non-null (state cleared otherwise).
Model load_checkpoint(const std::string& path, OptimizerState* opt = nullptr);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace coagents::nn
