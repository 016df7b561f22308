#include "irradcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "irradcast/error.hpp"

namespace irradcast::nn {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size())
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string());
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += " x ";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
}

void accumulate_xwt(const Tensor& x, const Tensor& wt, Tensor& out) {
    const std::size_t batch = x.rows(), inner = x.cols(), outer = wt.cols();
    if (wt.rows() != inner || out.rows() != batch || out.cols() != outer)
        throw ShapeError("x*w^T: x " + x.shape_string() + ", w^T " + wt.shape_string() + ", out " +
                         out.shape_string());
    const double* xp = x.data();
    const double* wp = wt.data();
    double* op = out.data();
    for (std::size_t b = 0; b < batch; ++b) {
        double* orow = op + b * outer;
        for (std::size_t k = 0; k < inner; ++k) {
            const double xv = xp[b * inner + k];
            const double* wrow = wp + k * outer;
            for (std::size_t o = 0; o < outer; ++o) orow[o] += xv * wrow[o];
        }
    }
}

void accumulate_dzt_x(const Tensor& dz, const Tensor& x, Tensor& dw) {
    const std::size_t batch = dz.rows(), outer = dz.cols(), inner = x.cols();
    if (x.rows() != batch || dw.rows() != outer || dw.cols() != inner)
        throw ShapeError("dz^T*x: dz " + dz.shape_string() + ", x " + x.shape_string() + ", dw " +
                         dw.shape_string());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xrow = x.data() + b * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            const double d = dz.data()[b * outer + o];
            if (d == 0.0) continue;
            double* wrow = dw.data() + o * inner;
            for (std::size_t k = 0; k < inner; ++k) wrow[k] += d * xrow[k];
        }
    }
}

void accumulate_dz_w(const Tensor& dz, const Tensor& w, Tensor& dx) {
    const std::size_t batch = dz.rows(), outer = dz.cols(), inner = w.cols();
    if (w.rows() != outer || dx.rows() != batch || dx.cols() != inner)
        throw ShapeError("dz*w: dz " + dz.shape_string() + ", w " + w.shape_string() + ", dx " + dx.shape_string());
    for (std::size_t b = 0; b < batch; ++b) {
        double* xrow = dx.data() + b * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            const double d = dz.data()[b * outer + o];
            if (d == 0.0) continue;
            const double* wrow = w.data() + o * inner;
            for (std::size_t k = 0; k < inner; ++k) xrow[k] += d * wrow[k];
        }
    }
}

Tensor transpose(const Tensor& m) {
    Tensor t = Tensor::matrix(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t.at(c, r) = m.at(r, c);
    return t;
}

void add_row_bias(Tensor& out, const Tensor& bias) {
    if (bias.size() != out.cols())
        throw ShapeError("bias " + bias.shape_string() + " does not match " + out.shape_string());
    for (std::size_t b = 0; b < out.rows(); ++b) {
        double* row = out.data() + b * out.cols();
        for (std::size_t o = 0; o < out.cols(); ++o) row[o] += bias[o];
    }
}

void accumulate_bias_grad(const Tensor& dz, Tensor& db) {
    if (db.size() != dz.cols()) throw ShapeError("bias gradient " + db.shape_string() + " vs " + dz.shape_string());
    for (std::size_t b = 0; b < dz.rows(); ++b)
        for (std::size_t o = 0; o < dz.cols(); ++o) db[o] += dz.at(b, o);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace irradcast::nn
