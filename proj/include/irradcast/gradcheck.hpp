#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "irradcast/network.hpp"

namespace irradcast::nn {

struct GradCheckTolerance {
    double epsilon = 1e-5;         // central-difference step
    double max_relative = 1e-4;
    /// Denominator floor: relative error is |a - n| / max(|a|, |n|, floor),
    /// so gradients near zero are judged against the difference noise.
    double gradient_floor = 1e-6;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::string worst_parameter;
    std::size_t elements_checked = 0;
    bool passed = true;
};

/// Compares backward_bptt against central finite differences of the MSE
/// loss for every parameter element. Uses only forward passes for the
/// numerical side.
GradCheckResult check_gradients(const ModelParams& params, const Tensor& x, const Tensor& targets, OutputMode mode,
                                const GradCheckTolerance& tol = {});

/// Smallest |pre-activation| over an RNN forward pass (infinity for LSTM).
/// Finite differences are meaningless within epsilon of a ReLU kink.
double min_relu_margin(const ModelParams& params, const Tensor& x);

struct GradCheckCase {
    ModelShape shape;
    OutputMode mode = OutputMode::many_to_many;
    std::size_t batch = 1;
    std::size_t seq_len = 1;
    GradCheckResult result;
};

struct GradCheckSuite {
    std::vector<GradCheckCase> cases;
    std::size_t kink_redraws = 0;
    double max_relative_error = 0.0;
    bool passed = true;
};

/// Random configurations with hidden <= max_hidden and seq <= max_seq,
/// alternating architecture and output mode.
GradCheckSuite run_gradcheck_suite(std::size_t configurations, std::uint64_t seed, std::size_t max_hidden = 8,
                                   std::size_t max_seq = 5, std::size_t max_batch = 4,
                                   const GradCheckTolerance& tol = {});

}  // namespace irradcast::nn
