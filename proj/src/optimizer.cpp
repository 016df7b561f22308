#include "irradcast/optimizer.hpp"

#include <cmath>

#include "irradcast/error.hpp"

namespace irradcast::nn {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

double global_norm(const ModelParams& grads) {
    double sq = 0.0;
    for (const auto& p : grads.parameters())
        for (double v : p.tensor->values()) sq += v * v;
    return std::sqrt(sq);
}

double clip_global_norm(ModelParams& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& p : grads.parameters())
            for (double& v : p.tensor->values()) v *= scale;
    }
    return norm;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate))
        throw ConfigError("learning rate must be positive");
    if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) || !(config_.beta2 >= 0.0 && config_.beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0, 1)");
}

void Optimizer::step(ModelParams& params, ModelParams& grads) {
    const auto p = params.parameters();
    const auto g = grads.parameters();
    if (p.size() != g.size()) throw ShapeError("gradient set does not match parameter set");
    for (std::size_t k = 0; k < p.size(); ++k) {
        require_same_shape(*p[k].tensor, *g[k].tensor, p[k].name.c_str());
        if (!g[k].tensor->all_finite()) throw NonFiniteGradient("non-finite gradient in " + p[k].name);
    }
    clip_global_norm(grads, config_.clip_norm);

    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::sgd) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            double* pv = p[k].tensor->data();
            const double* gv = g[k].tensor->data();
            for (std::size_t i = 0; i < p[k].tensor->size(); ++i) pv[i] -= lr * gv[i];
        }
    } else {
        if (first_moment_.empty()) {
            for (const auto& named : p) {
                first_moment_.emplace_back(named.tensor->shape());
                second_moment_.emplace_back(named.tensor->shape());
            }
        }
        const double t = static_cast<double>(steps_ + 1);
        const double bc1 = 1.0 - std::pow(config_.beta1, t);
        const double bc2 = 1.0 - std::pow(config_.beta2, t);
        for (std::size_t k = 0; k < p.size(); ++k) {
            double* pv = p[k].tensor->data();
            const double* gv = g[k].tensor->data();
            double* m = first_moment_[k].data();
            double* v = second_moment_[k].data();
            for (std::size_t i = 0; i < p[k].tensor->size(); ++i) {
                m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gv[i];
                v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gv[i] * gv[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                pv[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            }
        }
    }
    ++steps_;
    ++params.generation;
}

}  // namespace irradcast::nn
