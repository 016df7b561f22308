#include "irradcast/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace irradcast::nn {

namespace {

double loss_of(const ModelParams& params, const Tensor& x, const Tensor& targets, OutputMode mode) {
    return mse_loss(targets, sequence_predict(params, x, mode)).loss;
}

}  // namespace

GradCheckResult check_gradients(const ModelParams& params, const Tensor& x, const Tensor& targets, OutputMode mode,
                                const GradCheckTolerance& tol) {
    auto fwd = sequence_forward(params, x, mode);
    const auto loss = mse_loss(targets, fwd.output);
    const ModelParams analytic = backward_bptt(params, fwd.cache, loss.grad);

    GradCheckResult res;
    ModelParams probe = params;
    auto probe_tensors = probe.parameters();
    const auto grad_tensors = analytic.parameters();
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
        Tensor& t = *probe_tensors[k].tensor;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t[i];
            t[i] = orig + tol.epsilon;
            const double up = loss_of(probe, x, targets, mode);
            t[i] = orig - tol.epsilon;
            const double down = loss_of(probe, x, targets, mode);
            t[i] = orig;
            const double numeric = (up - down) / (2.0 * tol.epsilon);
            const double a = (*grad_tensors[k].tensor)[i];
            const double abs_err = std::abs(a - numeric);
            ++res.elements_checked;
            res.max_absolute_error = std::max(res.max_absolute_error, abs_err);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), tol.gradient_floor});
            if (rel > res.max_relative_error) {
                res.max_relative_error = rel;
                res.worst_parameter = probe_tensors[k].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    res.passed = res.max_relative_error <= tol.max_relative;
    return res;
}

double min_relu_margin(const ModelParams& params, const Tensor& x) {
    if (params.arch != Arch::rnn) return std::numeric_limits<double>::infinity();
    const auto fwd = sequence_forward(params, x, params.output_dim == 1 ? OutputMode::many_to_one
                                                                         : OutputMode::many_to_many);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& layer : fwd.cache.layers)
        for (const auto& z : layer.pre)
            for (double v : z.values()) margin = std::min(margin, std::abs(v));
    return margin;
}

GradCheckSuite run_gradcheck_suite(std::size_t configurations, std::uint64_t seed, std::size_t max_hidden,
                                   std::size_t max_seq, std::size_t max_batch, const GradCheckTolerance& tol) {
    GradCheckSuite suite;
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::normal_distribution<double> normal(0.0, 1.0);
    // Margin well above the perturbation's effect on any pre-activation.
    const double kink_margin = 1e3 * tol.epsilon;

    for (std::size_t n = 0; n < configurations; ++n) {
        GradCheckCase c;
        c.shape.arch = (n % 2 == 0) ? Arch::rnn : Arch::lstm;
        c.mode = (n / 2) % 2 == 0 ? OutputMode::many_to_one : OutputMode::many_to_many;
        for (;;) {
            c.shape.input_dim = pick(1, 5);
            c.shape.hidden_dim = pick(1, max_hidden);
            c.shape.output_dim = c.mode == OutputMode::many_to_one ? 1 : pick(1, 4);
            c.shape.num_layers = pick(1, 2);
            c.batch = pick(1, max_batch);
            c.seq_len = pick(1, max_seq);
            ModelParams params = make_initialized_params(c.shape, rng());
            // random biases so every code path carries signal
            for (auto& p : params.parameters())
                if (p.tensor->rank() == 1)
                    for (auto& v : p.tensor->values()) v = 0.3 * normal(rng);
            Tensor x({c.batch, c.seq_len, c.shape.input_dim});
            for (auto& v : x.values()) v = normal(rng);
            Tensor targets = Tensor::matrix(c.batch, c.shape.output_dim);
            for (auto& v : targets.values()) v = normal(rng);
            if (min_relu_margin(params, x) < kink_margin) {
                ++suite.kink_redraws;
                continue;
            }
            c.result = check_gradients(params, x, targets, c.mode, tol);
            break;
        }
        suite.max_relative_error = std::max(suite.max_relative_error, c.result.max_relative_error);
        suite.passed = suite.passed && c.result.passed;
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

}  // namespace irradcast::nn
