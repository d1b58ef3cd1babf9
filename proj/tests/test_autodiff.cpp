#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pinc/autodiff.hpp"
#include "pinc/rng.hpp"
#include "test_support.hpp"

using namespace pinc;
using namespace pinc::testing;

TEST_CASE("dual arithmetic follows (a+be)(c+de) = ac + (ad+bc)e") {
    Dual<double> a{2.0, 3.0}, b{5.0, 7.0};
    auto prod = a * b;
    CHECK(prod.v == 10.0);
    CHECK(prod.d == 2.0 * 7.0 + 3.0 * 5.0);
    auto sum = a + b;
    CHECK(sum.v == 7.0);
    CHECK(sum.d == 10.0);
    auto quot = a / b;
    CHECK(quot.v == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(quot.d == doctest::Approx((3.0 - 0.4 * 7.0) / 5.0).epsilon(1e-15));
}

TEST_CASE("dual elementary functions match finite differences") {
    Rng rng(7);
    auto check = [&](auto fn, auto dfn, double lo, double hi) {
        for (int i = 0; i < 20; ++i) {
            const double x = rng.uniform(lo, hi);
            Dual<double> d = fn(Dual<double>{x, 1.0});
            const double h = 1e-6;
            const double fd = (dfn(x + h) - dfn(x - h)) / (2.0 * h);
            CHECK(d.d == doctest::Approx(fd).epsilon(1e-7));
            CHECK(d.v == doctest::Approx(dfn(x)).epsilon(1e-14));
        }
    };
    check([](Dual<double> x) { return tanh(x); }, [](double x) { return std::tanh(x); }, -2.0,
          2.0);
    check([](Dual<double> x) { return softplus(x); },
          [](double x) { return pinc::softplus(x); }, -3.0, 3.0);
    check([](Dual<double> x) { return sqrt(x); }, [](double x) { return std::sqrt(x); }, 0.3,
          4.0);
    check([](Dual<double> x) { return abs(x); }, [](double x) { return std::abs(x); }, 0.2,
          2.0);
    check([](Dual<double> x) { return square(x); }, [](double x) { return x * x; }, -2.0,
          2.0);
}

TEST_CASE("tape gradients of a hand-built expression are exact") {
    Tape tape;
    Var x = tape.leaf(1.5);
    Var y = tape.leaf(-0.7);
    Var z = tape.leaf(0.4);
    // f = x*y + tanh(z) / x - square(y)
    Var f = x * y + tanh(z) / x - square(y);
    std::vector<double> adj;
    tape.backward(f, adj);
    const double tz = std::tanh(0.4);
    CHECK(adj[x.idx] == doctest::Approx(-0.7 - tz / (1.5 * 1.5)).epsilon(1e-15));
    CHECK(adj[y.idx] == doctest::Approx(1.5 - 2.0 * (-0.7)).epsilon(1e-15));
    CHECK(adj[z.idx] == doctest::Approx((1.0 - tz * tz) / 1.5).epsilon(1e-15));
}

TEST_CASE("scalar toy network: quadratic loss gradient is the analytic one") {
    Tape tape;
    Var w = tape.leaf(1.25);
    Var loss = square(w - 3.0);
    std::vector<double> adj;
    tape.backward(loss, adj);
    CHECK(adj[w.idx] == 2.0 * (1.25 - 3.0));
}

TEST_CASE("constant folding keeps zero-tangent chains off the tape") {
    Tape tape;
    Var x = tape.leaf(2.0);
    const std::size_t before = tape.size();
    Var c = constant(0.0) * x;      // folds to a constant
    Var d = constant(1.0) * x;      // aliases x
    Var e = x + constant(0.0);      // aliases x
    CHECK(c.is_const());
    CHECK(d.idx == x.idx);
    CHECK(e.idx == x.idx);
    CHECK(tape.size() == before);
}

TEST_CASE("fused dot_affine matches elementwise ops and their gradients") {
    Rng rng(11);
    Tape tape;
    std::vector<Var> w, x;
    for (int i = 0; i < 6; ++i) {
        w.push_back(tape.leaf(rng.uniform(-1, 1)));
        x.push_back(tape.leaf(rng.uniform(-1, 1)));
    }
    Var b = tape.leaf(0.3);
    Var fused = dot_affine(std::span<const Var>(w), std::span<const Var>(x), b);
    Var manual = b;
    for (int i = 0; i < 6; ++i) manual = manual + w[i] * x[i];
    CHECK(fused.val == doctest::Approx(manual.val).epsilon(1e-15));
    std::vector<double> adj_fused, adj_manual;
    tape.backward(fused, adj_fused);
    tape.backward(manual, adj_manual);
    for (int i = 0; i < 6; ++i) {
        CHECK(adj_fused[w[i].idx] == doctest::Approx(adj_manual[w[i].idx]).epsilon(1e-14));
        CHECK(adj_fused[x[i].idx] == doctest::Approx(adj_manual[x[i].idx]).epsilon(1e-14));
    }
}

TEST_CASE("forward_with_time_derivative: zeroed output layer has zero rate") {
    ModelParams p = small_model(3);
    zero_output_layer(p);
    NetState ns{0.2, -0.1, 0.4, std::cos(0.3), std::sin(0.3), 0.1, 0.0, 0.05, -0.2};
    ControlInput u{1.0, 0.1, 2.0, 0.05};
    for (double t : {0.0, 0.02, 0.08}) {
        auto [value, rate] = forward_with_time_derivative(p, ns, u, t);
        for (int i = 0; i < 9; ++i) {
            CHECK(rate[i] == 0.0);
        }
        CHECK(value.x == ns.x);
        CHECK(value.cos_psi == ns.cos_psi);
    }
}

TEST_CASE("forward_with_time_derivative matches central differences") {
    for (Activation act : {Activation::AdaptiveSoftplus, Activation::AdaptiveTanh}) {
        ModelParams p = small_model(17, 2, 8, act);
        NetState ns{0.3, -0.4, 0.2, std::cos(-1.1), std::sin(-1.1), 0.4, -0.1, 0.1, 0.3};
        ControlInput u{0.8, -0.05, 1.5, 0.02};
        const double h = 1e-5;
        for (double t : {0.01, 0.04, 0.07}) {
            auto [value, rate] = forward_with_time_derivative(p, ns, u, t);
            const NetState fp = forward(p, ns, u, t + h);
            const NetState fm = forward(p, ns, u, t - h);
            const auto ap = fp.to_array();
            const auto am = fm.to_array();
            for (int i = 0; i < 9; ++i) {
                const double fd = (ap[i] - am[i]) / (2.0 * h);
                CHECK(rate[i] ==
                      doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
            }
        }
    }
}

TEST_CASE("rate is continuous in t for smooth activations") {
    ModelParams p = small_model(23);
    NetState ns{0.0, 0.0, 0.0, 1.0, 0.0, 0.2, 0.0, 0.1, 0.0};
    ControlInput u{0.5, 0.0, 1.0, 0.0};
    Rng rng(5);
    for (int probe = 0; probe < 10; ++probe) {
        const double t = rng.uniform(0.0, 0.08);
        auto [v1, r1] = forward_with_time_derivative(p, ns, u, t);
        auto [v2, r2] = forward_with_time_derivative(p, ns, u, t + 1e-9);
        for (int i = 0; i < 9; ++i) {
            CHECK(std::abs(r2[i] - r1[i]) < 1e-6);
        }
    }
}

namespace {

Batch tiny_batch(int n_traj = 2, int n_steps = 6) {
    GenConfig cfg = small_gen_config(42, n_traj, n_steps);
    Dataset ds = generate_dataset(cfg);
    return make_batch_all(ds);
}

} // namespace

TEST_CASE("perfect fit: data loss gradient is exactly zero") {
    // equilibrium dataset (all states stay zero) + zero-increment model
    GenConfig cfg;
    cfg.seed = 1;
    cfg.n_trajectories = 2;
    cfg.n_steps = 5;
    cfg.ranges = SamplingRanges{0, 0, 0, 0, 0, 0, 0, 0};
    cfg.input.kind = InputKind::Sine;
    cfg.input.amplitude = 0.0;
    cfg.phys.V_sub = cfg.phys.m / cfg.phys.rho_water; // neutral buoyancy
    Dataset ds = generate_dataset(cfg);
    Batch b = make_batch_all(ds);

    ModelParams p = small_model(9);
    zero_output_layer(p);
    GradWorkspace ws;
    auto [value, grad] = loss_value_and_grad(LossKind::Data, p, b, 2, ws);
    CHECK(value == 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("gradient check: every loss matches directional finite differences") {
    Batch b = tiny_batch();
    ModelParams p = small_model(31);
    GradWorkspace ws;
    Rng rng(77);
    const double h = 1e-5;
    const int n_pred = 2;
    for (LossKind kind : {LossKind::Data, LossKind::Physics, LossKind::InitialCondition,
                          LossKind::Rollout, LossKind::PhysicsRollout}) {
        CAPTURE(loss_name(kind));
        auto [value, grad] = loss_value_and_grad(kind, p, b, n_pred, ws);
        CHECK(std::isfinite(value));
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> dir(p.flat.size());
            double norm = 0.0;
            for (double& d : dir) {
                d = rng.normal();
                norm += d * d;
            }
            norm = std::sqrt(norm);
            for (double& d : dir) d /= norm;
            const double fd = directional_fd(
                [&](const ModelParams& q) { return loss_value(kind, q, b, n_pred); }, p, dir,
                h);
            double analytic = 0.0;
            for (std::size_t i = 0; i < dir.size(); ++i) analytic += grad[i] * dir[i];
            CHECK(analytic ==
                  doctest::Approx(fd).epsilon(1e-5).scale(std::max(1e-3, std::abs(fd))));
        }
    }
}

TEST_CASE("forward dual rate equals reverse mode through the time input") {
    ModelParams p = small_model(13);
    const std::array<double, 9> ns = {0.1, -0.2, 0.3, std::cos(0.7), std::sin(0.7),
                                      0.2,  0.1,  0.0, -0.1};
    ControlInput u{0.4, -0.02, 1.1, 0.01};
    const double t = 0.05;

    auto [value, rate] = forward_with_time_derivative(
        p, NetState::from_array(ns), u, t);

    // reverse mode: parameters as constants, t as the only leaf
    Tape tape;
    std::vector<Var> theta;
    theta.reserve(p.flat.size());
    for (double v : p.flat) theta.push_back(constant(v));
    ParamView<Var> pv{&p.layout, theta.data()};
    std::array<Var, 9> ns_v;
    for (int i = 0; i < 9; ++i) ns_v[i] = constant(ns[i]);
    Var t_leaf = tape.leaf(t);
    auto out = forward_generic<Var, Var>(p.config, pv, ns_v, u, t_leaf);
    for (int row = 0; row < 9; ++row) {
        std::vector<double> adj;
        tape.backward(out[row], adj);
        const double reverse_rate = out[row].is_const() ? 0.0 : adj[t_leaf.idx];
        CHECK(std::abs(reverse_rate - rate[row]) < 1e-10);
    }
}

TEST_CASE("gradient of a weighted sum of losses is the weighted sum of gradients") {
    Batch b = tiny_batch();
    ModelParams p = small_model(41);
    GradWorkspace ws;
    auto [v_data, g_data] = loss_value_and_grad(LossKind::Data, p, b, 2, ws);
    auto [v_ic, g_ic] = loss_value_and_grad(LossKind::InitialCondition, p, b, 2, ws);
    const double w1 = 0.7, w2 = 1.9;

    // single tape over w1*L_data + w2*L_ic
    Tape tape;
    std::vector<Var> theta;
    for (double v : p.flat) theta.push_back(tape.leaf(v));
    ParamView<Var> pv{&p.layout, theta.data()};
    ModelEval<Var> ev{&p.config, pv};
    Var data_sum = constant(0.0), ic_sum = constant(0.0);
    std::size_t data_count = 0, ic_count = 0;
    for (const auto& tr : b.trajs) {
        auto [ds, dc] = data_sq_sum(ev, tr, b.T);
        data_sum = data_sum + ds;
        data_count += dc;
        auto [is, ic_c] = ic_sq_sum(ev, tr);
        ic_sum = ic_sum + is;
        ic_count += ic_c;
    }
    Var total = data_sum * (w1 / static_cast<double>(data_count)) +
                ic_sum * (w2 / static_cast<double>(ic_count));
    CHECK(total.val == doctest::Approx(w1 * v_data + w2 * v_ic).epsilon(1e-12));
    std::vector<double> adj;
    tape.backward(total, adj);
    for (std::size_t i = 0; i < p.flat.size(); ++i) {
        const double expect = w1 * g_data[i] + w2 * g_ic[i];
        CHECK(adj[i] == doctest::Approx(expect).epsilon(1e-12).scale(
                            std::max(1.0, std::abs(expect))));
    }
}

TEST_CASE("loss gradient reports the loss name on non-finite input") {
    Batch b = tiny_batch(1, 4);
    ModelParams p = small_model(51);
    p.flat[0] = std::numeric_limits<double>::quiet_NaN();
    GradWorkspace ws;
    CHECK_THROWS_AS(loss_value_and_grad(LossKind::Data, p, b, 2, ws), NumericError);
}
