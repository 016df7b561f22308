#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "irradcast/tensor.hpp"

namespace irradcast::nn {

enum class Arch { rnn, lstm };
/// many_to_one emits a single value (fixed horizon); many_to_many one value per horizon.
enum class OutputMode { many_to_one, many_to_many };

std::string_view to_string(Arch a);
std::string_view to_string(OutputMode m);
Arch parse_arch(std::string_view s);

/// Elman cell with ReLU hidden activation.
struct RnnCell {
    Tensor w_hx;  // [hidden x input]
    Tensor w_hh;  // [hidden x hidden]
    Tensor b_h;   // [hidden]
};

/// LSTM cell; every gate acts on the concatenation [h(t-1), x(t)].
struct LstmCell {
    Tensor w_f, w_i, w_c, w_o;  // [hidden x (hidden + input)]
    Tensor b_f, b_i, b_c, b_o;  // [hidden]
};

/// Linear output layer on the final hidden state.
struct OutputHead {
    Tensor w_yh;  // [output x hidden]
    Tensor b_y;   // [output]
};

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};
struct ConstNamedTensor {
    std::string name;
    const Tensor* tensor;
};

struct ModelParams {
    Arch arch = Arch::rnn;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 0;
    std::vector<RnnCell> rnn_layers;
    std::vector<LstmCell> lstm_layers;
    OutputHead head;
    /// Bumped on every in-place update; forward caches remember it.
    std::uint64_t generation = 0;

    std::size_t num_layers() const { return arch == Arch::rnn ? rnn_layers.size() : lstm_layers.size(); }
    std::size_t parameter_count() const;

    /// Every tensor in a fixed order with stable names.
    std::vector<NamedTensor> parameters();
    std::vector<ConstNamedTensor> parameters() const;

    /// Throws ShapeError when dimensions are inconsistent.
    void validate() const;

    /// Same architecture and dims, all values zero (gradient accumulator shape).
    ModelParams zeros_like() const;

    bool same_values(const ModelParams& other) const;
};

struct ModelShape {
    Arch arch = Arch::rnn;
    std::size_t input_dim = 1;
    std::size_t hidden_dim = 8;
    std::size_t output_dim = 1;
    std::size_t num_layers = 1;
};

ModelParams make_zero_params(const ModelShape& shape);
/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, LSTM forget bias +1.
ModelParams make_initialized_params(const ModelShape& shape, std::uint64_t seed);

// Single-sample cell operations.

/// h_t = ReLU(W_hx x_t + W_hh h_prev + b_h)
Tensor rnn_step(const RnnCell& cell, const Tensor& x_t, const Tensor& h_prev);
/// y = W_yh h + b_y
Tensor rnn_output(const OutputHead& head, const Tensor& h_t);

struct GateValues {
    Tensor forget, input, candidate, output;
};
struct LstmStepResult {
    Tensor h;
    Tensor c;
    GateValues gates;
};
LstmStepResult lstm_step(const LstmCell& cell, const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev);

/// Per-layer, per-step activations kept for backpropagation through time.
struct LayerTrace {
    std::vector<Tensor> inputs;      // x(t) fed to this layer, [batch x in]
    std::vector<Tensor> hidden;      // h(t), [batch x hidden]
    std::vector<Tensor> pre;         // RNN: pre-activation z(t)
    std::vector<Tensor> concat;      // LSTM: [h(t-1), x(t)]
    std::vector<Tensor> forget, input, candidate, output, cell, cell_tanh;
};

struct ForwardCache {
    const ModelParams* params = nullptr;
    std::uint64_t generation = 0;
    std::size_t batch = 0;
    std::size_t seq_len = 0;
    OutputMode mode = OutputMode::many_to_many;
    std::vector<LayerTrace> layers;

    std::size_t steps() const { return seq_len; }
};

struct ForwardResult {
    Tensor output;  // [batch x output]
    ForwardCache cache;
};

/// Unrolls the network over x [batch x seq x features] from zero states and
/// applies the head to the final hidden state.
ForwardResult sequence_forward(const ModelParams& params, const Tensor& x, OutputMode mode);
/// Same output without keeping a cache.
Tensor sequence_predict(const ModelParams& params, const Tensor& x, OutputMode mode);

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // dL/dP
};
/// Mean squared error over every element and its gradient 2(P - T)/n.
LossResult mse_loss(const Tensor& targets, const Tensor& predictions);

/// Exact gradients of the loss for every parameter, full BPTT over the
/// cached sequence. Throws CacheError when the cache does not belong to the
/// given parameters at their current generation.
ModelParams backward_bptt(const ModelParams& params, const ForwardCache& cache, const Tensor& d_output);

}  // namespace irradcast::nn
