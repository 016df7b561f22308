#include <doctest.h>

#include <cmath>
#include <random>

#include "irradcast/error.hpp"
#include "irradcast/gradcheck.hpp"
#include "irradcast/network.hpp"
#include "irradcast/optimizer.hpp"

using namespace irradcast;
using namespace irradcast::nn;

namespace {

Tensor vec(std::initializer_list<double> v) { return Tensor({v.size()}, std::vector<double>(v)); }

void check_close(const Tensor& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.values()) v = u(rng);
    return t;
}

LstmCell two_unit_cell() {
    LstmCell c;
    c.w_f = Tensor::from_rows({{0.1, -0.2, 0.3}, {0.4, 0.05, -0.15}});
    c.w_i = Tensor::from_rows({{-0.3, 0.2, 0.1}, {0.25, -0.1, 0.35}});
    c.w_c = Tensor::from_rows({{0.5, -0.4, 0.2}, {-0.1, 0.3, 0.6}});
    c.w_o = Tensor::from_rows({{0.2, 0.1, -0.5}, {0.3, -0.25, 0.15}});
    c.b_f = vec({1.0, 1.0});
    c.b_i = vec({0.0, 0.1});
    c.b_c = vec({-0.05, 0.0});
    c.b_o = vec({0.2, -0.1});
    return c;
}

}  // namespace

TEST_CASE("rnn_step") {
    RnnCell zero{Tensor::matrix(3, 2), Tensor::matrix(3, 3), Tensor::vector(3)};
    check_close(rnn_step(zero, vec({4.0, -7.0}), vec({1.0, 2.0, 3.0})), {0.0, 0.0, 0.0}, 0.0);

    RnnCell ident{Tensor::from_rows({{1, 0}, {0, 1}}), Tensor::matrix(2, 2), Tensor::vector(2)};
    check_close(rnn_step(ident, vec({1.0, -2.0}), vec({0.0, 0.0})), {1.0, 0.0}, 0.0);

    // Frozen from tests/oracles/cell_traces.py.
    RnnCell r3{Tensor::from_rows({{0.2, -0.5, 0.1}, {0.7, 0.3, -0.2}, {-0.4, 0.6, 0.9}}),
               Tensor::from_rows({{0.05, 0.1, -0.3}, {-0.2, 0.4, 0.25}, {0.15, -0.35, 0.5}}), vec({0.1, 0.9, 0.05})};
    check_close(rnn_step(r3, vec({0.8, -1.1, 1.4}), vec({0.3, -0.2, 0.6})), {0.765, 0.86, 0.7449999999999999}, 1e-12);

    CHECK_THROWS_AS(rnn_step(r3, vec({1.0, 2.0}), vec({0.0, 0.0, 0.0})), ShapeError);
    CHECK_THROWS_AS(rnn_step(r3, vec({1.0, 2.0, 3.0}), vec({0.0})), ShapeError);
}

TEST_CASE("rnn_output") {
    OutputHead head{Tensor::from_rows({{0.3, -0.6, 0.2}, {0.9, 0.1, -0.4}}), vec({0.05, -0.1})};
    check_close(rnn_output(head, vec({0.0, 0.0, 0.0})), {0.05, -0.1}, 0.0);
    check_close(rnn_output(head, vec({0.3, -0.2, 0.6})), {0.37999999999999995, -0.09}, 1e-12);
    OutputHead id{Tensor::from_rows({{1, 0}, {0, 1}}), Tensor::vector(2)};
    check_close(rnn_output(id, vec({0.25, -3.0})), {0.25, -3.0}, 0.0);
    CHECK_THROWS_AS(rnn_output(head, vec({1.0})), ShapeError);
}

TEST_CASE("lstm_step") {
    LstmCell zero{Tensor::matrix(2, 3), Tensor::matrix(2, 3), Tensor::matrix(2, 3), Tensor::matrix(2, 3),
                  Tensor::vector(2),    Tensor::vector(2),    Tensor::vector(2),    Tensor::vector(2)};
    const auto z = lstm_step(zero, vec({0.3}), vec({0.0, 0.0}), vec({0.0, 0.0}));
    check_close(z.gates.forget, {0.5, 0.5}, 0.0);
    check_close(z.gates.input, {0.5, 0.5}, 0.0);
    check_close(z.gates.output, {0.5, 0.5}, 0.0);
    check_close(z.gates.candidate, {0.0, 0.0}, 0.0);
    check_close(z.c, {0.0, 0.0}, 0.0);
    check_close(z.h, {0.0, 0.0}, 0.0);

    LstmCell hold = zero;
    hold.b_f = vec({800.0, 800.0});
    hold.b_i = vec({-800.0, -800.0});
    hold.w_c = Tensor::from_rows({{0.3, -0.7, 1.1}, {0.9, 0.2, -0.4}});
    const auto held = lstm_step(hold, vec({2.5}), vec({0.4, -0.9}), vec({0.123, -4.56}));
    check_close(held.c, {0.123, -4.56}, 0.0);

    // Frozen from tests/oracles/cell_traces.py.
    const LstmCell cell = two_unit_cell();
    Tensor h = vec({0.1, -0.3}), c = vec({0.5, -0.2});
    const std::vector<std::vector<double>> want_h{{0.21875189842106454, 0.022293279903728515},
                                                  {0.20688530054197446, -0.044316614475434626},
                                                  {0.16876716831053876, 0.16397018291343726}};
    const std::vector<std::vector<double>> want_c{{0.5171012192425134, 0.042289553309205585},
                                                  {0.35333808677747486, -0.0935635591624098},
                                                  {0.43730268361829694, 0.31464565744879336}};
    const double xs[] = {0.7, -0.4, 1.2};
    for (int t = 0; t < 3; ++t) {
        const auto r = lstm_step(cell, vec({xs[t]}), h, c);
        check_close(r.h, want_h[t], 1e-12);
        check_close(r.c, want_c[t], 1e-12);
        h = r.h;
        c = r.c;
    }
    CHECK_THROWS_AS(lstm_step(cell, vec({1.0, 2.0}), h, c), ShapeError);
}

TEST_CASE("sequence_forward agrees with explicit step calls") {
    std::mt19937_64 rng(21);
    for (const Arch arch : {Arch::rnn, Arch::lstm}) {
        const ModelParams p = make_initialized_params({arch, 3, 5, 2, 1}, 77);
        Tensor x = random_tensor({1, 3, 3}, rng);

        Tensor h = Tensor::vector(5), c = Tensor::vector(5);
        for (std::size_t t = 0; t < 3; ++t) {
            Tensor xt = vec({x.at(0, t, 0), x.at(0, t, 1), x.at(0, t, 2)});
            if (arch == Arch::rnn) {
                h = rnn_step(p.rnn_layers[0], xt, h);
            } else {
                auto r = lstm_step(p.lstm_layers[0], xt, h, c);
                h = r.h;
                c = r.c;
            }
            if (t == 0 && arch == Arch::rnn) {
                Tensor x1({1, 1, 3}, std::vector<double>{x.at(0, 0, 0), x.at(0, 0, 1), x.at(0, 0, 2)});
                const Tensor one = sequence_forward(p, x1, OutputMode::many_to_many).output;
                const Tensor direct = rnn_output(p.head, h);
                for (std::size_t k = 0; k < 2; ++k) CHECK(one[k] == direct[k]);
            }
        }
        const Tensor y = rnn_output(p.head, h);
        const Tensor out = sequence_forward(p, x, OutputMode::many_to_many).output;
        check_close(out, {y[0], y[1]}, 1e-12);

        Tensor batch({4, 3, 3});
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t i = 0; i < 9; ++i) batch[b * 9 + i] = x[i];
        const Tensor rows = sequence_predict(p, batch, OutputMode::many_to_many);
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t k = 0; k < 2; ++k) CHECK(rows.at(b, k) == out[k]);
    }
}

TEST_CASE("forward invariants over random networks") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t layers = 1 + trial % 2;
        const ModelParams rnn = make_initialized_params({Arch::rnn, 4, 6, 1, layers}, trial);
        const ModelParams lstm = make_initialized_params({Arch::lstm, 4, 6, 3, layers}, trial);
        const Tensor x = random_tensor({3, 5, 4}, rng, -3.0, 3.0);

        const auto fr = sequence_forward(rnn, x, OutputMode::many_to_one);
        for (const auto& layer : fr.cache.layers)
            for (const auto& h : layer.hidden)
                for (double v : h.values()) CHECK(v >= 0.0);

        const auto fl = sequence_forward(lstm, x, OutputMode::many_to_many);
        CHECK(fl.cache.steps() == 5);
        for (const auto& layer : fl.cache.layers) {
            CHECK(layer.forget.size() == 5);
            for (const auto* gate : {&layer.forget, &layer.input, &layer.output})
                for (const auto& g : *gate)
                    for (double v : g.values()) CHECK((v > 0.0 && v < 1.0));
            for (const auto& g : layer.candidate)
                for (double v : g.values()) CHECK((v > -1.0 && v < 1.0));
        }
    }
}

TEST_CASE("mse_loss") {
    const Tensor t = Tensor::from_rows({{1.0, 0.0}});
    CHECK(mse_loss(t, t).loss == 0.0);
    const auto l = mse_loss(t, Tensor::from_rows({{0.0, 0.0}}));
    CHECK(l.loss == 0.5);
    check_close(l.grad, {-1.0, 0.0}, 0.0);

    std::mt19937_64 rng(4);
    const Tensor a = random_tensor({7, 3}, rng), b = random_tensor({7, 3}, rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    const auto r = mse_loss(a, b);
    CHECK(std::abs(r.loss - sum / 21.0) <= 1e-12);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(r.grad[i] - 2.0 * (b[i] - a[i]) / 21.0) <= 1e-15);
    CHECK_THROWS_AS(mse_loss(a, Tensor::matrix(3, 7)), ShapeError);
}

TEST_CASE("backward_bptt") {
    SUBCASE("zero upstream gradient") {
        std::mt19937_64 rng(2);
        for (const Arch arch : {Arch::rnn, Arch::lstm}) {
            const ModelParams p = make_initialized_params({arch, 3, 4, 2, 2}, 5);
            const auto f = sequence_forward(p, random_tensor({2, 4, 3}, rng), OutputMode::many_to_many);
            const ModelParams g = backward_bptt(p, f.cache, Tensor::matrix(2, 2));
            for (const auto& nt : g.parameters())
                for (double v : nt.tensor->values()) CHECK(v == 0.0);
        }
    }
    SUBCASE("scalar chain rule") {
        // Frozen from tests/oracles/cell_traces.py.
        ModelParams p = make_zero_params({Arch::rnn, 1, 1, 1, 1});
        p.rnn_layers[0].w_hx[0] = 0.8;
        p.rnn_layers[0].b_h[0] = 0.1;
        p.head.w_yh[0] = -1.5;
        p.head.b_y[0] = 0.2;
        const Tensor x({1, 1, 1}, std::vector<double>{0.9});
        const auto f = sequence_forward(p, x, OutputMode::many_to_one);
        const auto loss = mse_loss(Tensor::from_rows({{0.3}}), f.output);
        const ModelParams g = backward_bptt(p, f.cache, loss.grad);
        CHECK(std::abs(g.head.w_yh[0] - -2.1812000000000005) <= 1e-12);
        CHECK(std::abs(g.head.b_y[0] - -2.66) <= 1e-12);
        CHECK(std::abs(g.rnn_layers[0].w_hx[0] - 3.591) <= 1e-12);
        CHECK(std::abs(g.rnn_layers[0].b_h[0] - 3.99) <= 1e-12);
        CHECK(g.rnn_layers[0].w_hh[0] == 0.0);
    }
    SUBCASE("stale cache") {
        std::mt19937_64 rng(3);
        ModelParams p = make_initialized_params({Arch::lstm, 2, 3, 1, 1}, 1);
        const auto f = sequence_forward(p, random_tensor({1, 2, 2}, rng), OutputMode::many_to_one);
        ModelParams g = backward_bptt(p, f.cache, Tensor::matrix(1, 1, 1.0));
        Optimizer opt({OptimizerKind::sgd, 0.1});
        opt.step(p, g);
        CHECK_THROWS_AS(backward_bptt(p, f.cache, Tensor::matrix(1, 1, 1.0)), CacheError);
        const ModelParams copy = p;
        CHECK_THROWS_AS(backward_bptt(copy, f.cache, Tensor::matrix(1, 1, 1.0)), CacheError);
    }
}

TEST_CASE("finite-difference agreement, both cells and both modes") {
    std::mt19937_64 rng(12);
    for (const Arch arch : {Arch::rnn, Arch::lstm})
        for (const OutputMode mode : {OutputMode::many_to_one, OutputMode::many_to_many})
            for (std::size_t layers : {1u, 2u}) {
                const std::size_t out = mode == OutputMode::many_to_one ? 1 : 4;
                const ModelParams p = make_initialized_params({arch, 3, 5, out, layers}, 100 + layers);
                Tensor x = random_tensor({3, 4, 3}, rng);
                if (arch == Arch::rnn)
                    while (min_relu_margin(p, x) < 1e-3) x = random_tensor({3, 4, 3}, rng);
                const auto r = check_gradients(p, x, random_tensor({3, out}, rng), mode);
                CAPTURE(r.worst_parameter);
                CHECK(r.passed);
                CHECK(r.max_relative_error <= 1e-4);
                CHECK(r.elements_checked == p.parameter_count());
            }

    const auto suite = run_gradcheck_suite(12, 2024);
    CHECK(suite.cases.size() == 12);
    CHECK(suite.passed);
}

TEST_CASE("initialization") {
    const ModelParams a = make_initialized_params({Arch::lstm, 4, 8, 4, 2}, 9);
    const ModelParams b = make_initialized_params({Arch::lstm, 4, 8, 4, 2}, 9);
    CHECK(a.same_values(b));
    CHECK_FALSE(a.same_values(make_initialized_params({Arch::lstm, 4, 8, 4, 2}, 10)));
    for (double v : a.lstm_layers[0].b_f.values()) CHECK(v == 1.0);
    for (double v : a.lstm_layers[0].b_i.values()) CHECK(v == 0.0);
    const double bound = 1.0 / std::sqrt(12.0);
    for (double v : a.lstm_layers[0].w_c.values()) CHECK(std::abs(v) <= bound);
    CHECK(a.parameter_count() == 4 * (8 * 12 + 8) + 4 * (8 * 16 + 8) + (4 * 8 + 4));
    CHECK_NOTHROW(a.validate());
    ModelParams broken = a;
    broken.head.w_yh = Tensor::matrix(4, 7);
    CHECK_THROWS_AS(broken.validate(), ShapeError);
}

TEST_CASE("optimizer") {
    ModelParams p = make_zero_params({Arch::rnn, 1, 1, 1, 1});
    p.head.b_y[0] = 1.0;
    ModelParams g = p.zeros_like();
    g.head.b_y[0] = 0.5;
    Optimizer sgd({OptimizerKind::sgd, 0.1, 0.9, 0.999, 1e-8, 0.0});
    sgd.step(p, g);
    CHECK(p.head.b_y[0] == doctest::Approx(0.95).epsilon(1e-15));

    ModelParams before = p;
    ModelParams zero = p.zeros_like();
    sgd.step(p, zero);
    CHECK(p.same_values(before));
    Optimizer adam({OptimizerKind::adam, 1e-3});
    zero = p.zeros_like();
    adam.step(p, zero);
    CHECK(p.same_values(before));

    ModelParams big = make_zero_params({Arch::rnn, 1, 2, 1, 1}).zeros_like();
    big.head.w_yh[0] = 6.0;
    big.head.w_yh[1] = 8.0;
    CHECK(global_norm(big) == 10.0);
    CHECK(clip_global_norm(big, 1.0) == 10.0);
    CHECK(std::abs(global_norm(big) - 1.0) <= 1e-12);

    ModelParams q = make_initialized_params({Arch::lstm, 2, 3, 1, 1}, 4);
    const ModelParams q0 = q;
    ModelParams bad = q.zeros_like();
    bad.head.b_y[0] = std::nan("");
    Optimizer guarded({OptimizerKind::adam, 1e-2});
    CHECK_THROWS_AS(guarded.step(q, bad), NonFiniteGradient);
    CHECK(q.same_values(q0));
    CHECK(guarded.steps_taken() == 0);
}

TEST_CASE("small-step SGD descends on a fixed batch") {
    std::mt19937_64 rng(6);
    for (const Arch arch : {Arch::rnn, Arch::lstm}) {
        ModelParams p = make_initialized_params({arch, 3, 6, 2, 1}, 13);
        const Tensor x = random_tensor({8, 4, 3}, rng);
        const Tensor t = random_tensor({8, 2}, rng, -0.5, 0.5);
        Optimizer opt({OptimizerKind::sgd, 0.01});
        double prev = mse_loss(t, sequence_predict(p, x, OutputMode::many_to_many)).loss;
        int rises = 0;
        for (int step = 0; step < 10; ++step) {
            auto f = sequence_forward(p, x, OutputMode::many_to_many);
            auto g = backward_bptt(p, f.cache, mse_loss(t, f.output).grad);
            opt.step(p, g);
            const double now = mse_loss(t, sequence_predict(p, x, OutputMode::many_to_many)).loss;
            rises += now > prev;
            prev = now;
        }
        CHECK(rises <= 1);
    }
}

TEST_CASE("fixed seed gives identical trajectories") {
    auto run = [] {
        std::mt19937_64 rng(31);
        ModelParams p = make_initialized_params({Arch::lstm, 3, 4, 4, 1}, 3);
        const Tensor x = random_tensor({5, 3, 3}, rng);
        const Tensor t = random_tensor({5, 4}, rng);
        Optimizer opt({OptimizerKind::adam, 1e-2});
        for (int i = 0; i < 20; ++i) {
            auto f = sequence_forward(p, x, OutputMode::many_to_many);
            auto g = backward_bptt(p, f.cache, mse_loss(t, f.output).grad);
            opt.step(p, g);
        }
        return p;
    };
    CHECK(run().same_values(run()));
}
