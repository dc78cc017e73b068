#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "oracle_helpers.hpp"
#include "tempcast/errors.hpp"
#include "tempcast/gradcheck.hpp"
#include "tempcast/train.hpp"

using namespace tempcast;

namespace {

bool bit_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool params_bit_equal(const ModelParams& a, const ModelParams& b) {
    const auto ta = a.tensors(), tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (!bit_equal(ta[i]->data(), tb[i]->data())) return false;
    return true;
}

WindowedDataset sinusoid_windows(int days, double noise_sigma, std::uint64_t seed, int in_len,
                                 int out_len, int stride) {
    DailySeries series = synth_generate(1.0, 0.3, kDefaultOmega, noise_sigma, days, seed,
                                        first_day_of_year(2008), "synth");
    const Standardizer std_fit = fit_standardizer(series);
    return make_windows(std_fit.apply(series.temps), in_len, out_len, stride);
}

} // namespace

TEST_CASE("loss weights defaults and validation") {
    LossWeights w;
    CHECK(w.lambda_data == 1.0);
    CHECK(w.lambda_physics == 0.001);
    CHECK(w.omega == doctest::Approx(2.0 * std::numbers::pi / 365.0).epsilon(1e-15));
    CHECK(w.dt == 1.0);

    w.lambda_physics = -0.1;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    w = LossWeights{};
    w.omega = 0.0;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
}

TEST_CASE("mse_loss") {
    CHECK(mse_loss(std::vector{1.0, 2.0, 3.0}, std::vector{1.0, 2.0, 3.0}) == 0.0);
    CHECK(mse_loss(std::vector{0.0, 0.0}, std::vector{1.0, 1.0}) == 1.0);
    // hand sum: (1 + 4 + 9) / 3
    CHECK(mse_loss(std::vector{0.0, 0.0, 0.0}, std::vector{1.0, 2.0, 3.0}) ==
          doctest::Approx(14.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(mse_loss(std::vector{1.0}, std::vector{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);

    SUBCASE("taped version agrees with the plain one") {
        Rng rng(3);
        std::vector<double> a(12), b(12);
        for (double& v : a) v = rng.uniform(-2, 2);
        for (double& v : b) v = rng.uniform(-2, 2);
        Tape tape;
        NodeId loss = mse_loss_node(tape, tape.leaf(Tensor({3, 4}, a)), tape.leaf(Tensor({3, 4}, b)));
        CHECK(tape.value(loss)[0] == mse_loss(a, b));
    }
}

TEST_CASE("physics residuals and loss") {
    const LossWeights w;
    const double omega2 = w.omega * w.omega;
    const double omega4 = omega2 * omega2;

    SUBCASE("zero forecast: zero residuals, zero loss") {
        std::vector<double> y(30, 0.0);
        for (double r : physics_residuals(y, w)) CHECK(r == 0.0);
        CHECK(physics_loss(y, w) == 0.0);
    }
    SUBCASE("constant forecast: residual omega^2 each, loss omega^4") {
        std::vector<double> y(30, 1.0);
        const std::vector<double> r = physics_residuals(y, w);
        CHECK(r.size() == 28);
        for (double v : r) CHECK(v == doctest::Approx(omega2).epsilon(1e-12));
        CHECK(physics_loss(y, w) == doctest::Approx(omega4).epsilon(1e-12));
    }
    SUBCASE("sampled cosine solves the discrete equation to 1e-8") {
        // oracle identity: r_i = (2 cos(omega) - 2 + omega^2) cos(omega i),
        // and |2 cos(omega) - 2 + omega^2| ~ omega^4 / 12 < 1e-8.
        for (double phase : {0.0, 0.7, 2.1}) {
            std::vector<double> y(30);
            for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = std::cos(w.omega * i + phase);
            for (double r : physics_residuals(y, w)) CHECK(std::abs(r) < 1e-8);
            CHECK(physics_loss(y, w) < 1e-16);
        }
    }
    SUBCASE("affine-in-index forecasts leave exactly the oscillator term") {
        // dyadic a, b keep the second difference exactly zero in binary fp
        std::vector<double> y(30);
        for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = 0.5 * i + 2.0;
        const std::vector<double> r = physics_residuals(y, w);
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == omega2 * y[i + 1]);

        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const double a = rng.uniform(-1, 1), b = rng.uniform(-3, 3);
            for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = a * i + b;
            const std::vector<double> rr = physics_residuals(y, w);
            for (std::size_t i = 0; i < rr.size(); ++i)
                CHECK(rr[i] == doctest::Approx(omega2 * y[i + 1]).epsilon(1e-9));
        }
    }
    SUBCASE("windows shorter than 3 are rejected") {
        CHECK_THROWS_AS(physics_residuals(std::vector{1.0, 2.0}, w), std::invalid_argument);
    }
    SUBCASE("taped residuals agree with the plain ones and flow gradients") {
        Rng rng(7);
        std::vector<double> y(30);
        for (double& v : y) v = rng.uniform(-2, 2);
        Tape tape;
        NodeId yhat = tape.leaf(Tensor({1, 30}, y));
        PhysicsNodes nodes = physics_residuals_node(tape, yhat, w);
        const std::vector<double> plain = physics_residuals(y, w);
        CHECK(bit_equal(tape.value(nodes.residuals).data(), plain));
        CHECK(tape.value(nodes.loss)[0] == physics_loss(y, w));

        Gradients g = tape.backward(nodes.loss);
        const std::vector<double> fd = oracle::fd_gradient(
            [&](std::span<const double> p) {
                return physics_loss(std::vector<double>(p.begin(), p.end()), w);
            },
            y, 1e-6);
        CHECK(oracle::max_rel_err(g.at(yhat).data(), fd) < 1e-4);
    }
}

TEST_CASE("total_loss") {
    LossWeights w;
    CHECK(total_loss(2.0, 0.0, w) == 2.0);
    CHECK(total_loss(0.0, 5.0, w) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, w), NumericError);
    CHECK_THROWS_AS(total_loss(0.0, INFINITY, w), NumericError);
    CHECK_THROWS_AS(total_loss(-1.0, 0.0, w), std::invalid_argument);

    SUBCASE("monotone nondecreasing in both components") {
        Rng rng(9);
        for (int trial = 0; trial < 100; ++trial) {
            const double d = rng.uniform(0, 4), p = rng.uniform(0, 4);
            const double bump = rng.uniform(0, 2);
            CHECK(total_loss(d + bump, p, w) >= total_loss(d, p, w));
            CHECK(total_loss(d, p + bump, w) >= total_loss(d, p, w));
        }
    }
    SUBCASE("lambda_physics = 0 drops the physics term entirely") {
        LossWeights plain = w;
        plain.lambda_physics = 0.0;
        CHECK(total_loss(1.25, 123.0, plain) == 1.25);
        Tape tape;
        NodeId d = tape.leaf(Tensor::scalar(1.25));
        CHECK(tape.value(total_loss_node(tape, d, -1, plain))[0] == 1.25);
    }
}

TEST_CASE("adam_step") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        Tensor theta({2, 2}, {0.5, -0.25, 1.0, 2.0});
        const Tensor before = theta;
        AdamState state = AdamState::init({&theta});
        adam_step(state, {&theta}, {Tensor::zeros({2, 2})});
        CHECK(bit_equal(theta.data(), before.data()));
        CHECK(state.step_count == 1);
    }
    SUBCASE("first step on a unit gradient moves by about -lr") {
        Tensor theta({1}, {0.0});
        AdamState state = AdamState::init({&theta});
        adam_step(state, {&theta}, {Tensor({1}, {1.0})});
        // oracle: m=0.1, v=0.001, mhat=1, vhat=1, step = -lr/(1+eps)
        const double expected = -state.lr / (1.0 + state.eps);
        CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
        CHECK(std::abs(theta[0] - (-0.001)) < 1e-9);
    }
    SUBCASE("non-finite gradients abort") {
        Tensor theta({1}, {0.0});
        AdamState state = AdamState::init({&theta});
        Tensor bad = Tensor::uninitialized({1});
        bad[0] = std::nan("");
        CHECK_THROWS_AS(adam_step(state, {&theta}, {std::move(bad)}), NumericError);
    }
    SUBCASE("shape mismatch is rejected") {
        Tensor theta({2}, {0.0, 0.0});
        AdamState state = AdamState::init({&theta});
        CHECK_THROWS_AS(adam_step(state, {&theta}, {Tensor::zeros({3})}), std::invalid_argument);
    }
}

// Spec invariant: gradient of L_total on a hidden-dim-4, 2-window instance
// matches finite differences within 1e-3.
TEST_CASE("L_total gradient matches finite differences on a small instance") {
    ArchConfig arch;
    arch.cell = CellKind::lstm;
    arch.hidden_dim = 4;
    arch.num_layers = 2;
    arch.seq_len = 12;
    arch.pred_len = 6;
    arch.dropout_rate = 0.0;
    LossWeights weights;

    Rng rng(21);
    Tensor inputs = Tensor::uninitialized({2, 12});
    Tensor targets = Tensor::uninitialized({2, 6});
    for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i] = rng.uniform(-1.5, 1.5);
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = rng.uniform(-1.5, 1.5);

    ModelParams params = init_params(arch, 22);
    auto build = [&](Tape& tape, const ModelParams& p) {
        ParamNodes nodes = bind_params(tape, p);
        NodeId yhat = encoder_forward(tape, nodes, arch, inputs, RunMode::eval, nullptr);
        NodeId data = mse_loss_node(tape, yhat, tape.leaf(targets));
        NodeId physics = physics_residuals_node(tape, yhat, weights).loss;
        return std::pair{nodes, total_loss_node(tape, data, physics, weights)};
    };

    Tape tape;
    auto [nodes, loss] = build(tape, params);
    Gradients grads = tape.backward(loss);
    std::vector<double> analytic;
    for (const Tensor& g : collect_param_grads(grads, nodes, params))
        analytic.insert(analytic.end(), g.data().begin(), g.data().end());

    ModelParams scratch = params;
    const std::vector<double> point = flatten(scratch.tensors());
    auto f = [&](std::span<const double> p) {
        unflatten(p, scratch.tensors());
        Tape t;
        return t.value(build(t, scratch).second)[0];
    };
    GradCheckResult r = grad_check(f, point, analytic, 1e-5);
    CHECK_MESSAGE(r.max_rel_err < 1e-3, "worst rel err " << r.max_rel_err);
}

TEST_CASE("train loop") {
    ArchConfig arch;
    arch.cell = CellKind::lstm;
    arch.hidden_dim = 6;
    arch.num_layers = 2;
    arch.seq_len = 20;
    arch.pred_len = 6;
    arch.dropout_rate = 0.1;

    const WindowedDataset train_ds = sinusoid_windows(400, 0.2, 1, 20, 6, 15);
    const WindowedDataset val_ds = sinusoid_windows(200, 0.2, 2, 20, 6, 15);
    LossWeights weights;
    TrainConfig config;
    config.epochs = 40;
    config.seed = 3;

    SUBCASE("report has exactly `epochs` finite entries") {
        TrainReport report = train(arch, train_ds, val_ds, weights, config);
        CHECK(report.epochs.size() == 40);
        for (const EpochRecord& r : report.epochs) {
            CHECK(std::isfinite(r.train_total));
            CHECK(std::isfinite(r.train_data));
            CHECK(std::isfinite(r.train_physics));
            CHECK(std::isfinite(r.val_data));
            CHECK(r.train_total == doctest::Approx(weights.lambda_data * r.train_data +
                                                   weights.lambda_physics * r.train_physics)
                                       .epsilon(1e-15));
        }
        CHECK_FALSE(report.best_val_params.has_value());
    }
    SUBCASE("two runs with the same seed are bit-identical") {
        TrainReport a = train(arch, train_ds, val_ds, weights, config);
        TrainReport b = train(arch, train_ds, val_ds, weights, config);
        CHECK(params_bit_equal(a.final_params, b.final_params));
        for (std::size_t i = 0; i < a.epochs.size(); ++i) {
            CHECK(a.epochs[i].train_total == b.epochs[i].train_total);
            CHECK(a.epochs[i].val_data == b.epochs[i].val_data);
        }
    }
    SUBCASE("lambda_physics = 0 trains the plain model, physics column zero") {
        LossWeights plain = weights;
        plain.lambda_physics = 0.0;
        TrainReport a = train(arch, train_ds, val_ds, plain, config);
        TrainReport b = train(arch, train_ds, val_ds, plain, config);
        CHECK(params_bit_equal(a.final_params, b.final_params));
        for (const EpochRecord& r : a.epochs) {
            CHECK(r.train_physics == 0.0);
            CHECK(r.train_total == r.train_data);
        }
        TrainReport with_physics = train(arch, train_ds, val_ds, weights, config);
        CHECK_FALSE(params_bit_equal(a.final_params, with_physics.final_params));
    }
    SUBCASE("keep_best_val retains a checkpoint") {
        TrainConfig c = config;
        c.keep_best_val = true;
        TrainReport report = train(arch, train_ds, val_ds, weights, c);
        CHECK(report.best_val_params.has_value());
    }
    SUBCASE("empty dataset is rejected") {
        WindowedDataset empty;
        CHECK_THROWS_AS(train(arch, empty, val_ds, weights, config), InputError);
    }
    SUBCASE("divergence aborts with the epoch index") {
        TrainConfig blowup = config;
        blowup.epochs = 10;
        blowup.lr = 1e160;
        ArchConfig rnn_arch = arch;
        rnn_arch.cell = CellKind::rnn;
        try {
            train(rnn_arch, train_ds, val_ds, weights, blowup);
            FAIL("expected divergence");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        }
    }
}

TEST_CASE("training loss falls on a noiseless sinusoid") {
    ArchConfig arch;
    arch.cell = CellKind::lstm;
    arch.hidden_dim = 8;
    arch.num_layers = 2;
    arch.seq_len = 90;
    arch.pred_len = 30;
    arch.dropout_rate = 0.0;

    const WindowedDataset train_ds = sinusoid_windows(500, 0.0, 4, 90, 30, 30);
    const WindowedDataset val_ds = sinusoid_windows(200, 0.0, 5, 90, 30, 30);
    TrainConfig config;
    config.epochs = 300;
    config.seed = 6;
    TrainReport report = train(arch, train_ds, val_ds, LossWeights{}, config);
    CHECK(report.epochs.back().train_total < 0.1 * report.epochs.front().train_total);
}
