#include "irradcast/network.hpp"

#include <cmath>
#include <random>

#include "irradcast/error.hpp"

namespace irradcast::nn {

namespace {

void require_shape(const Tensor& t, std::vector<std::size_t> expected, const std::string& name) {
    if (t.shape() != expected) {
        Tensor ref(expected);
        throw ShapeError(name + " has shape " + t.shape_string() + ", expected " + ref.shape_string());
    }
}

// Rank-2 [1 x n] view of a vector argument.
Tensor as_row(const Tensor& v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw ShapeError(std::string(what) + " has " + std::to_string(v.size()) + " elements, expected " +
                         std::to_string(n));
    return Tensor({1, n}, std::vector<double>(v.values().begin(), v.values().end()));
}

Tensor as_vector(const Tensor& row) { return Tensor({row.size()}, std::vector<double>(row.values().begin(), row.values().end())); }

struct RnnWeightsT {
    Tensor hx, hh;
};
struct LstmWeightsT {
    Tensor f, i, c, o;
};

Tensor concat_columns(const Tensor& a, const Tensor& b) {
    Tensor out = Tensor::matrix(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        auto ra = a.row(r);
        auto rb = b.row(r);
        std::copy(ra.begin(), ra.end(), dst.begin());
        std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

Tensor rnn_forward(const RnnCell& cell, const RnnWeightsT& wt, const Tensor& x, const Tensor& h_prev, Tensor* pre_out) {
    Tensor z = Tensor::matrix(x.rows(), cell.w_hx.rows());
    accumulate_xwt(x, wt.hx, z);
    accumulate_xwt(h_prev, wt.hh, z);
    add_row_bias(z, cell.b_h);
    Tensor h = z;
    for (auto& v : h.values()) v = v > 0.0 ? v : 0.0;
    if (pre_out) *pre_out = std::move(z);
    return h;
}

struct LstmForwardStep {
    Tensor concat, f, i, g, o, c, c_tanh, h;
};

LstmForwardStep lstm_forward(const LstmCell& cell, const LstmWeightsT& wt, const Tensor& x, const Tensor& h_prev,
                             const Tensor& c_prev) {
    LstmForwardStep s;
    s.concat = concat_columns(h_prev, x);
    const std::size_t batch = x.rows(), hidden = cell.b_f.size();
    auto gate = [&](const Tensor& w_t, const Tensor& bias) {
        Tensor z = Tensor::matrix(batch, hidden);
        accumulate_xwt(s.concat, w_t, z);
        add_row_bias(z, bias);
        return z;
    };
    s.f = gate(wt.f, cell.b_f);
    s.i = gate(wt.i, cell.b_i);
    s.g = gate(wt.c, cell.b_c);
    s.o = gate(wt.o, cell.b_o);
    for (auto& v : s.f.values()) v = sigmoid(v);
    for (auto& v : s.i.values()) v = sigmoid(v);
    for (auto& v : s.o.values()) v = sigmoid(v);
    for (auto& v : s.g.values()) v = std::tanh(v);
    s.c = Tensor::matrix(batch, hidden);
    s.c_tanh = Tensor::matrix(batch, hidden);
    s.h = Tensor::matrix(batch, hidden);
    for (std::size_t k = 0; k < s.c.size(); ++k) {
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
        s.c_tanh[k] = std::tanh(s.c[k]);
        s.h[k] = s.o[k] * s.c_tanh[k];
    }
    return s;
}

Tensor head_forward(const OutputHead& head, const Tensor& wt_yh, const Tensor& h) {
    Tensor y = Tensor::matrix(h.rows(), head.w_yh.rows());
    accumulate_xwt(h, wt_yh, y);
    add_row_bias(y, head.b_y);
    return y;
}

Tensor step_slice(const Tensor& x, std::size_t t) {
    const std::size_t batch = x.dim(0), seq = x.dim(1), feat = x.dim(2);
    Tensor out = Tensor::matrix(batch, feat);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = x.data() + (b * seq + t) * feat;
        std::copy(src, src + feat, out.data() + b * feat);
    }
    return out;
}

void check_input(const ModelParams& params, const Tensor& x, OutputMode mode) {
    params.validate();
    if (x.rank() != 3) throw ShapeError("sequence input must be [batch x seq x features], got " + x.shape_string());
    if (x.dim(2) != params.input_dim)
        throw ShapeError("sequence input has " + std::to_string(x.dim(2)) + " features, model expects " +
                         std::to_string(params.input_dim));
    if (x.dim(1) == 0 || x.dim(0) == 0) throw ShapeError("sequence input is empty: " + x.shape_string());
    if (mode == OutputMode::many_to_one && params.output_dim != 1)
        throw ShapeError("many_to_one requires output_dim 1, model has " + std::to_string(params.output_dim));
    if (!x.all_finite()) throw ShapeError("sequence input contains non-finite values");
}

ForwardResult run_forward(const ModelParams& params, const Tensor& x, OutputMode mode, bool keep_cache) {
    check_input(params, x, mode);
    const std::size_t batch = x.dim(0), seq = x.dim(1), hidden = params.hidden_dim;

    ForwardResult res;
    ForwardCache& cache = res.cache;
    cache.params = &params;
    cache.generation = params.generation;
    cache.batch = batch;
    cache.seq_len = seq;
    cache.mode = mode;

    std::vector<Tensor> layer_input(seq);
    for (std::size_t t = 0; t < seq; ++t) layer_input[t] = step_slice(x, t);

    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        LayerTrace trace;
        std::vector<Tensor> outputs(seq);
        Tensor h = Tensor::matrix(batch, hidden);
        if (params.arch == Arch::rnn) {
            const RnnCell& cell = params.rnn_layers[l];
            const RnnWeightsT wt{transpose(cell.w_hx), transpose(cell.w_hh)};
            for (std::size_t t = 0; t < seq; ++t) {
                Tensor pre;
                h = rnn_forward(cell, wt, layer_input[t], h, keep_cache ? &pre : nullptr);
                outputs[t] = h;
                if (keep_cache) trace.pre.push_back(std::move(pre));
            }
        } else {
            const LstmCell& cell = params.lstm_layers[l];
            const LstmWeightsT wt{transpose(cell.w_f), transpose(cell.w_i), transpose(cell.w_c), transpose(cell.w_o)};
            Tensor c = Tensor::matrix(batch, hidden);
            for (std::size_t t = 0; t < seq; ++t) {
                LstmForwardStep s = lstm_forward(cell, wt, layer_input[t], h, c);
                h = s.h;
                c = s.c;
                outputs[t] = s.h;
                if (keep_cache) {
                    trace.concat.push_back(std::move(s.concat));
                    trace.forget.push_back(std::move(s.f));
                    trace.input.push_back(std::move(s.i));
                    trace.candidate.push_back(std::move(s.g));
                    trace.output.push_back(std::move(s.o));
                    trace.cell.push_back(std::move(s.c));
                    trace.cell_tanh.push_back(std::move(s.c_tanh));
                }
            }
        }
        if (keep_cache) {
            trace.inputs = std::move(layer_input);
            trace.hidden = outputs;
            cache.layers.push_back(std::move(trace));
        }
        layer_input = std::move(outputs);
    }
    res.output = head_forward(params.head, transpose(params.head.w_yh), layer_input.back());
    return res;
}

}  // namespace

std::string_view to_string(Arch a) { return a == Arch::rnn ? "rnn" : "lstm"; }
std::string_view to_string(OutputMode m) { return m == OutputMode::many_to_one ? "many_to_one" : "many_to_many"; }

Arch parse_arch(std::string_view s) {
    if (s == "rnn") return Arch::rnn;
    if (s == "lstm") return Arch::lstm;
    throw ConfigError("unknown architecture '" + std::string(s) + "' (expected rnn or lstm)");
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor->size();
    return n;
}

std::vector<NamedTensor> ModelParams::parameters() {
    std::vector<NamedTensor> out;
    for (std::size_t l = 0; l < rnn_layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        auto& c = rnn_layers[l];
        out.push_back({p + "w_hx", &c.w_hx});
        out.push_back({p + "w_hh", &c.w_hh});
        out.push_back({p + "b_h", &c.b_h});
    }
    for (std::size_t l = 0; l < lstm_layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        auto& c = lstm_layers[l];
        out.push_back({p + "w_f", &c.w_f});
        out.push_back({p + "w_i", &c.w_i});
        out.push_back({p + "w_c", &c.w_c});
        out.push_back({p + "w_o", &c.w_o});
        out.push_back({p + "b_f", &c.b_f});
        out.push_back({p + "b_i", &c.b_i});
        out.push_back({p + "b_c", &c.b_c});
        out.push_back({p + "b_o", &c.b_o});
    }
    out.push_back({"head.w_yh", &head.w_yh});
    out.push_back({"head.b_y", &head.b_y});
    return out;
}

std::vector<ConstNamedTensor> ModelParams::parameters() const {
    std::vector<ConstNamedTensor> out;
    for (auto& p : const_cast<ModelParams*>(this)->parameters()) out.push_back({p.name, p.tensor});
    return out;
}

void ModelParams::validate() const {
    if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) throw ShapeError("model dimensions must be positive");
    if (num_layers() == 0) throw ShapeError("model has no recurrent layers");
    if (arch == Arch::rnn && !lstm_layers.empty()) throw ShapeError("rnn model carries lstm layers");
    if (arch == Arch::lstm && !rnn_layers.empty()) throw ShapeError("lstm model carries rnn layers");
    const std::size_t h = hidden_dim;
    for (std::size_t l = 0; l < rnn_layers.size(); ++l) {
        const std::size_t in = l == 0 ? input_dim : h;
        const auto& c = rnn_layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        require_shape(c.w_hx, {h, in}, p + "w_hx");
        require_shape(c.w_hh, {h, h}, p + "w_hh");
        require_shape(c.b_h, {h}, p + "b_h");
    }
    for (std::size_t l = 0; l < lstm_layers.size(); ++l) {
        const std::size_t in = l == 0 ? input_dim : h;
        const auto& c = lstm_layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        require_shape(c.w_f, {h, h + in}, p + "w_f");
        require_shape(c.w_i, {h, h + in}, p + "w_i");
        require_shape(c.w_c, {h, h + in}, p + "w_c");
        require_shape(c.w_o, {h, h + in}, p + "w_o");
        require_shape(c.b_f, {h}, p + "b_f");
        require_shape(c.b_i, {h}, p + "b_i");
        require_shape(c.b_c, {h}, p + "b_c");
        require_shape(c.b_o, {h}, p + "b_o");
    }
    require_shape(head.w_yh, {output_dim, h}, "head.w_yh");
    require_shape(head.b_y, {output_dim}, "head.b_y");
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    z.generation = 0;
    for (auto& p : z.parameters()) p.tensor->fill(0.0);
    return z;
}

bool ModelParams::same_values(const ModelParams& other) const {
    if (arch != other.arch || input_dim != other.input_dim || hidden_dim != other.hidden_dim ||
        output_dim != other.output_dim || num_layers() != other.num_layers())
        return false;
    const auto a = parameters();
    const auto b = other.parameters();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(*a[i].tensor == *b[i].tensor)) return false;
    return true;
}

ModelParams make_zero_params(const ModelShape& s) {
    if (s.input_dim == 0 || s.hidden_dim == 0 || s.output_dim == 0 || s.num_layers == 0)
        throw ShapeError("model dimensions must be positive");
    ModelParams p;
    p.arch = s.arch;
    p.input_dim = s.input_dim;
    p.hidden_dim = s.hidden_dim;
    p.output_dim = s.output_dim;
    const std::size_t h = s.hidden_dim;
    for (std::size_t l = 0; l < s.num_layers; ++l) {
        const std::size_t in = l == 0 ? s.input_dim : h;
        if (s.arch == Arch::rnn) {
            p.rnn_layers.push_back(RnnCell{Tensor::matrix(h, in), Tensor::matrix(h, h), Tensor::vector(h)});
        } else {
            LstmCell c;
            c.w_f = c.w_i = c.w_c = c.w_o = Tensor::matrix(h, h + in);
            c.b_f = c.b_i = c.b_c = c.b_o = Tensor::vector(h);
            p.lstm_layers.push_back(std::move(c));
        }
    }
    p.head = OutputHead{Tensor::matrix(s.output_dim, h), Tensor::vector(s.output_dim)};
    return p;
}

ModelParams make_initialized_params(const ModelShape& shape, std::uint64_t seed) {
    ModelParams p = make_zero_params(shape);
    std::mt19937_64 rng(seed);
    for (auto& named : p.parameters()) {
        Tensor& t = *named.tensor;
        if (t.rank() != 2) continue;  // biases start at zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : t.values()) v = dist(rng);
    }
    for (auto& c : p.lstm_layers) c.b_f.fill(1.0);
    return p;
}

Tensor rnn_step(const RnnCell& cell, const Tensor& x_t, const Tensor& h_prev) {
    const std::size_t hidden = cell.w_hx.rows(), in = cell.w_hx.cols();
    require_shape(cell.w_hh, {hidden, hidden}, "w_hh");
    require_shape(cell.b_h, {hidden}, "b_h");
    const Tensor x = as_row(x_t, in, "x_t");
    const Tensor h = as_row(h_prev, hidden, "h_prev");
    return as_vector(rnn_forward(cell, {transpose(cell.w_hx), transpose(cell.w_hh)}, x, h, nullptr));
}

Tensor rnn_output(const OutputHead& head, const Tensor& h_t) {
    require_shape(head.b_y, {head.w_yh.rows()}, "b_y");
    const Tensor h = as_row(h_t, head.w_yh.cols(), "h_t");
    return as_vector(head_forward(head, transpose(head.w_yh), h));
}

LstmStepResult lstm_step(const LstmCell& cell, const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev) {
    const std::size_t hidden = cell.b_f.size();
    if (cell.w_f.rank() != 2 || cell.w_f.rows() != hidden || cell.w_f.cols() <= hidden)
        throw ShapeError("w_f has shape " + cell.w_f.shape_string());
    const std::size_t in = cell.w_f.cols() - hidden;
    for (const Tensor* w : {&cell.w_i, &cell.w_c, &cell.w_o}) require_shape(*w, {hidden, hidden + in}, "gate weight");
    for (const Tensor* b : {&cell.b_i, &cell.b_c, &cell.b_o}) require_shape(*b, {hidden}, "gate bias");
    const Tensor x = as_row(x_t, in, "x_t");
    const Tensor h = as_row(h_prev, hidden, "h_prev");
    const Tensor c = as_row(c_prev, hidden, "c_prev");
    LstmForwardStep s = lstm_forward(
        cell, {transpose(cell.w_f), transpose(cell.w_i), transpose(cell.w_c), transpose(cell.w_o)}, x, h, c);
    return LstmStepResult{as_vector(s.h), as_vector(s.c),
                          GateValues{as_vector(s.f), as_vector(s.i), as_vector(s.g), as_vector(s.o)}};
}

ForwardResult sequence_forward(const ModelParams& params, const Tensor& x, OutputMode mode) {
    return run_forward(params, x, mode, true);
}

Tensor sequence_predict(const ModelParams& params, const Tensor& x, OutputMode mode) {
    return run_forward(params, x, mode, false).output;
}

LossResult mse_loss(const Tensor& targets, const Tensor& predictions) {
    require_same_shape(targets, predictions, "mse_loss");
    if (targets.size() == 0) throw ShapeError("mse_loss on empty tensors");
    const double n = static_cast<double>(targets.size());
    LossResult r;
    r.grad = Tensor(predictions.shape());
    double sum = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const double d = predictions[k] - targets[k];
        sum += d * d;
        r.grad[k] = 2.0 * d / n;
    }
    r.loss = sum / n;
    return r;
}

ModelParams backward_bptt(const ModelParams& params, const ForwardCache& cache, const Tensor& d_output) {
    if (cache.params != &params || cache.generation != params.generation)
        throw CacheError("forward cache is stale: it was recorded for different or since-updated parameters");
    if (cache.layers.size() != params.num_layers() || cache.seq_len == 0)
        throw CacheError("forward cache does not match the model's layer count");
    if (d_output.rank() != 2 || d_output.rows() != cache.batch || d_output.cols() != params.output_dim)
        throw ShapeError("output gradient has shape " + d_output.shape_string());

    const std::size_t batch = cache.batch, seq = cache.seq_len, hidden = params.hidden_dim;
    ModelParams grads = params.zeros_like();

    // head
    const Tensor& h_last = cache.layers.back().hidden.back();
    accumulate_dzt_x(d_output, h_last, grads.head.w_yh);
    accumulate_bias_grad(d_output, grads.head.b_y);

    // gradient flowing into each layer's hidden outputs, per step
    std::vector<Tensor> d_hidden(seq, Tensor::matrix(batch, hidden));
    accumulate_dz_w(d_output, params.head.w_yh, d_hidden.back());

    for (std::size_t li = params.num_layers(); li-- > 0;) {
        const LayerTrace& tr = cache.layers[li];
        const std::size_t in = tr.inputs.front().cols();
        std::vector<Tensor> d_inputs(seq, Tensor::matrix(batch, in));
        Tensor dh_next = Tensor::matrix(batch, hidden);

        if (params.arch == Arch::rnn) {
            const RnnCell& cell = params.rnn_layers[li];
            RnnCell& g = grads.rnn_layers[li];
            for (std::size_t t = seq; t-- > 0;) {
                Tensor dz = d_hidden[t];
                for (std::size_t k = 0; k < dz.size(); ++k) {
                    const double dh = dz[k] + dh_next[k];
                    dz[k] = tr.pre[t][k] > 0.0 ? dh : 0.0;
                }
                accumulate_dzt_x(dz, tr.inputs[t], g.w_hx);
                if (t > 0) accumulate_dzt_x(dz, tr.hidden[t - 1], g.w_hh);
                accumulate_bias_grad(dz, g.b_h);
                accumulate_dz_w(dz, cell.w_hx, d_inputs[t]);
                dh_next.fill(0.0);
                accumulate_dz_w(dz, cell.w_hh, dh_next);
            }
        } else {
            const LstmCell& cell = params.lstm_layers[li];
            LstmCell& g = grads.lstm_layers[li];
            Tensor dc_next = Tensor::matrix(batch, hidden);
            Tensor dzf = Tensor::matrix(batch, hidden), dzi = dzf, dzg = dzf, dzo = dzf;
            for (std::size_t t = seq; t-- > 0;) {
                const Tensor& f = tr.forget[t];
                const Tensor& i = tr.input[t];
                const Tensor& gc = tr.candidate[t];
                const Tensor& o = tr.output[t];
                const Tensor& ct = tr.cell_tanh[t];
                for (std::size_t k = 0; k < f.size(); ++k) {
                    const double dh = d_hidden[t][k] + dh_next[k];
                    const double c_prev = t > 0 ? tr.cell[t - 1][k] : 0.0;
                    const double d_o = dh * ct[k];
                    const double dc = dh * o[k] * (1.0 - ct[k] * ct[k]) + dc_next[k];
                    const double d_f = dc * c_prev;
                    const double d_i = dc * gc[k];
                    const double d_g = dc * i[k];
                    dc_next[k] = dc * f[k];
                    dzf[k] = d_f * f[k] * (1.0 - f[k]);
                    dzi[k] = d_i * i[k] * (1.0 - i[k]);
                    dzg[k] = d_g * (1.0 - gc[k] * gc[k]);
                    dzo[k] = d_o * o[k] * (1.0 - o[k]);
                }
                const Tensor& concat = tr.concat[t];
                accumulate_dzt_x(dzf, concat, g.w_f);
                accumulate_dzt_x(dzi, concat, g.w_i);
                accumulate_dzt_x(dzg, concat, g.w_c);
                accumulate_dzt_x(dzo, concat, g.w_o);
                accumulate_bias_grad(dzf, g.b_f);
                accumulate_bias_grad(dzi, g.b_i);
                accumulate_bias_grad(dzg, g.b_c);
                accumulate_bias_grad(dzo, g.b_o);

                Tensor d_concat = Tensor::matrix(batch, hidden + in);
                accumulate_dz_w(dzf, cell.w_f, d_concat);
                accumulate_dz_w(dzi, cell.w_i, d_concat);
                accumulate_dz_w(dzg, cell.w_c, d_concat);
                accumulate_dz_w(dzo, cell.w_o, d_concat);
                for (std::size_t b = 0; b < batch; ++b) {
                    const auto row = d_concat.row(b);
                    std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(hidden), dh_next.row(b).begin());
                    std::copy(row.begin() + static_cast<std::ptrdiff_t>(hidden), row.end(), d_inputs[t].row(b).begin());
                }
            }
        }
        d_hidden = std::move(d_inputs);
    }
    return grads;
}

}  // namespace irradcast::nn
