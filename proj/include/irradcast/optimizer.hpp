#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "irradcast/network.hpp"

namespace irradcast::nn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Global gradient-norm ceiling; <= 0 disables clipping.
    double clip_norm = 5.0;
};

double global_norm(const ModelParams& grads);
/// Rescales grads so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(ModelParams& grads, double max_norm);

/// Stateful parameter updater (plain SGD or Adam). Gradients are clipped
/// first; a non-finite gradient throws NonFiniteGradient and leaves the
/// parameters and optimizer state untouched.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config);

    void step(ModelParams& params, ModelParams& grads);

    const OptimizerConfig& config() const { return config_; }
    std::size_t steps_taken() const { return steps_; }

private:
    OptimizerConfig config_;
    std::size_t steps_ = 0;
    std::vector<Tensor> first_moment_;
    std::vector<Tensor> second_moment_;
};

}  // namespace irradcast::nn
