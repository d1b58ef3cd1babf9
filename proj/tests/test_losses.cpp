#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pinc/losses.hpp"
#include "test_support.hpp"

using namespace pinc;
using namespace pinc::testing;

namespace {

Batch sim_batch(std::uint64_t seed, int n_traj, int n_steps, int n_colloc = 2) {
    return make_batch_all(generate_dataset(small_gen_config(seed, n_traj, n_steps,
                                                            InputKind::Ramp, n_colloc)));
}

Batch equilibrium_batch(int n_traj = 2, int n_steps = 5) {
    GenConfig cfg;
    cfg.seed = 3;
    cfg.n_trajectories = n_traj;
    cfg.n_steps = n_steps;
    cfg.ranges = SamplingRanges{0, 0, 0, 0, 0, 0, 0, 0};
    cfg.input.kind = InputKind::Sine;
    cfg.input.amplitude = 0.0;
    cfg.phys.V_sub = cfg.phys.m / cfg.phys.rho_water;
    return make_batch_all(generate_dataset(cfg));
}

/// Truncates the last transition of every trajectory in a batch.
Batch drop_last_point(Batch b) {
    for (auto& tr : b.trajs) {
        tr.inputs.pop_back();
        tr.ic_targets.pop_back();
        tr.targets.pop_back();
        tr.controls.pop_back();
        tr.colloc.pop_back();
    }
    return b;
}

} // namespace

TEST_CASE("data loss") {
    Batch b = sim_batch(1, 2, 8);
    SUBCASE("the simulator flow is a perfect predictor") {
        CHECK(data_loss_with(SimFlowEval{b.phys, 10}, b) < 1e-20);
    }
    SUBCASE("a 0.1 offset in one component costs 0.01") {
        OffsetEval<SimFlowEval> stub{{b.phys, 10}, 0, 0.1};
        CHECK(data_loss_with(stub, b) == doctest::Approx(0.01).epsilon(1e-9));
    }
    SUBCASE("matches a hand-summed double loop for a synthetic predictor") {
        Batch small = sim_batch(2, 2, 4); // 2 trajectories x 3 transitions
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& tr : small.trajs) {
            for (int n = 0; n < tr.n_points(); ++n) {
                const auto pred =
                    SyntheticEval::formula(tr.inputs[n], tr.controls[n], small.T);
                for (int i = 0; i < 9; ++i) {
                    sum += (pred[i] - tr.targets[n][i]) * (pred[i] - tr.targets[n][i]);
                }
                ++count;
            }
        }
        CHECK(data_loss_with(SyntheticEval{}, small) ==
              doctest::Approx(sum / count).epsilon(1e-14));
    }
}

TEST_CASE("physics loss") {
    SUBCASE("zero at the neutral-buoyancy equilibrium with a zero-increment model") {
        Batch b = equilibrium_batch();
        ModelParams p = small_model(5);
        zero_output_layer(p);
        CHECK(physics_loss(p, b) == 0.0);
    }
    SUBCASE("affine stub matches the closed-form residual") {
        Batch b = sim_batch(7, 2, 5, 3);
        AffineEval stub;
        for (int i = 0; i < 9; ++i) stub.slope[i] = 0.1 * (i + 1);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& tr : b.trajs) {
            for (int n = 0; n < tr.n_points(); ++n) {
                for (double tau : tr.colloc[n]) {
                    std::array<double, 9> x;
                    for (int i = 0; i < 9; ++i) x[i] = tr.inputs[n][i] + stub.slope[i] * tau;
                    const auto f = lifted_derivative<double>(std::span<const double, 9>(x),
                                                             tr.controls[n], b.phys);
                    for (int i = 0; i < 9; ++i) {
                        sum += (stub.slope[i] - f[i]) * (stub.slope[i] - f[i]);
                    }
                    ++count;
                }
            }
        }
        CHECK(physics_loss_with(stub, b) == doctest::Approx(sum / count).epsilon(1e-14));
    }
    SUBCASE("the true flow drives the residual to zero") {
        Batch b = sim_batch(9, 2, 6);
        CHECK(physics_loss_with(SimFlowEval{b.phys, 32}, b) < 1e-6);
    }
}

TEST_CASE("initial condition loss") {
    SUBCASE("zeroed trunk with residual is exactly zero") {
        Batch b = sim_batch(11, 2, 5);
        ModelParams p = small_model(13);
        zero_output_layer(p);
        CHECK(ic_loss(p, b) == 0.0);
    }
    SUBCASE("an offset stub costs delta squared") {
        Batch b = sim_batch(15, 1, 5);
        struct IdentityEval {
            using S = double;
            std::array<double, 9> predict(const std::array<double, 9>& ns,
                                          const ControlInput&, double) const {
                return ns;
            }
            void predict_with_rate(const std::array<double, 9>& ns, const ControlInput&,
                                   double, std::array<double, 9>& value,
                                   std::array<double, 9>& rate) const {
                value = ns;
                rate.fill(0.0);
            }
        };
        OffsetEval<IdentityEval> stub{{}, 4, 0.2};
        CHECK(ic_loss_with(stub, b) == doctest::Approx(0.04).epsilon(1e-12));
    }
    SUBCASE("matches a brute-force double loop") {
        Batch b = sim_batch(17, 2, 4);
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& tr : b.trajs) {
            for (int n = 0; n < tr.n_points(); ++n) {
                const auto pred = SyntheticEval::formula(tr.inputs[n], tr.controls[n], 0.0);
                for (int i = 0; i < 9; ++i) {
                    sum += (pred[i] - tr.ic_targets[n][i]) * (pred[i] - tr.ic_targets[n][i]);
                }
                ++count;
            }
        }
        CHECK(ic_loss_with(SyntheticEval{}, b) == doctest::Approx(sum / count).epsilon(1e-14));
    }
}

TEST_CASE("rollout loss") {
    SUBCASE("the simulator flow is a perfect rollout predictor") {
        Batch b = sim_batch(19, 2, 8);
        CHECK(rollout_loss_with(SimFlowEval{b.phys, 10}, b, 3) < 1e-18);
    }
    SUBCASE("n_pred = 1 equals the data loss on the first N_D - 1 pairs") {
        Batch b = sim_batch(21, 2, 7);
        ModelParams p = small_model(23);
        const double roll1 = rollout_loss(p, b, 1);
        const double data_trunc = data_loss(p, drop_last_point(b));
        CHECK(roll1 == doctest::Approx(data_trunc).epsilon(1e-15));
    }
    SUBCASE("matches a hand-unrolled chain for 1 trajectory, N_D = 5, n_pred = 2") {
        Batch b = sim_batch(25, 1, 6); // 5 transitions
        REQUIRE(b.n_points() == 5);
        const int n_pred = 2;
        const int n_r = 5 - n_pred;
        SyntheticEval stub;
        double sum = 0.0;
        std::size_t count = 0;
        const auto& tr = b.trajs[0];
        for (int start = 0; start < n_r; ++start) {
            auto state = tr.inputs[start];
            for (int k = 1; k <= n_pred; ++k) {
                state = SyntheticEval::formula(state, tr.controls[start + k - 1], b.T);
                for (int i = 0; i < 9; ++i) {
                    const double d = state[i] - tr.targets[start + k - 1][i];
                    sum += d * d;
                }
                ++count;
            }
        }
        CHECK(rollout_loss_with(stub, b, n_pred) ==
              doctest::Approx(sum / count).epsilon(1e-14));
    }
    SUBCASE("requires more points than the horizon") {
        Batch b = sim_batch(27, 1, 4);
        CHECK_THROWS_AS(rollout_loss_with(SyntheticEval{}, b, 3), ConfigError);
    }
}

TEST_CASE("physics rollout loss") {
    SUBCASE("true flow stays below 1e-6") {
        Batch b = sim_batch(29, 2, 7);
        CHECK(physics_rollout_loss_with(SimFlowEval{b.phys, 32}, b, 3) < 1e-6);
    }
    SUBCASE("n_pred = 1 equals the physics loss on the first N_D - 1 points") {
        Batch b = sim_batch(31, 2, 6);
        ModelParams p = small_model(33);
        const double pr1 = physics_rollout_loss(p, b, 1);
        const double phys_trunc = physics_loss(p, drop_last_point(b));
        CHECK(pr1 == doctest::Approx(phys_trunc).epsilon(1e-15));
    }
    SUBCASE("zero at equilibrium with a zero-increment model") {
        Batch b = equilibrium_batch(2, 6);
        ModelParams p = small_model(35);
        zero_output_layer(p);
        CHECK(physics_rollout_loss(p, b, 2) == 0.0);
    }
}

TEST_CASE("loss invariants") {
    Batch b = sim_batch(37, 3, 6);
    ModelParams p = small_model(39);
    const int n_pred = 2;
    SUBCASE("non-negativity") {
        CHECK(data_loss(p, b) >= 0.0);
        CHECK(physics_loss(p, b) >= 0.0);
        CHECK(ic_loss(p, b) >= 0.0);
        CHECK(rollout_loss(p, b, n_pred) >= 0.0);
        CHECK(physics_rollout_loss(p, b, n_pred) >= 0.0);
    }
    SUBCASE("permutation invariance over trajectories") {
        Batch shuffled = b;
        std::swap(shuffled.trajs[0], shuffled.trajs[2]);
        for (LossKind kind : {LossKind::Data, LossKind::Physics, LossKind::InitialCondition,
                              LossKind::Rollout, LossKind::PhysicsRollout}) {
            const double a = loss_value(kind, p, b, n_pred);
            const double c = loss_value(kind, p, shuffled, n_pred);
            CHECK(a == doctest::Approx(c).epsilon(1e-12));
        }
    }
    SUBCASE("union of two batches is the count-weighted mean") {
        Batch first = b;
        first.trajs.resize(2);
        Batch second = b;
        second.trajs.erase(second.trajs.begin(), second.trajs.begin() + 2);
        for (LossKind kind : {LossKind::Data, LossKind::Physics, LossKind::InitialCondition,
                              LossKind::Rollout, LossKind::PhysicsRollout}) {
            const double whole = loss_value(kind, p, b, n_pred);
            const double a = loss_value(kind, p, first, n_pred);
            const double c = loss_value(kind, p, second, n_pred);
            // per-trajectory term counts are equal, so weights are 2 and 1
            const double mean = (2.0 * a + 1.0 * c) / 3.0;
            CHECK(whole == doctest::Approx(mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("batch construction") {
    Dataset ds = generate_dataset(small_gen_config(41, 3, 6, InputKind::Ramp, 3));
    SUBCASE("collocation subselection keeps the first k points") {
        Batch all = make_batch_all(ds, 0);
        Batch two = make_batch_all(ds, 2);
        CHECK(all.n_colloc() == 3);
        CHECK(two.n_colloc() == 2);
        for (std::size_t t = 0; t < ds.size(); ++t) {
            for (int n = 0; n < two.trajs[t].n_points(); ++n) {
                CHECK(two.trajs[t].colloc[n][0] == all.trajs[t].colloc[n][0]);
                CHECK(two.trajs[t].colloc[n][1] == all.trajs[t].colloc[n][1]);
            }
        }
    }
    SUBCASE("requesting more collocation points than stored fails") {
        CHECK_THROWS_AS(make_batch_all(ds, 4), ConfigError);
    }
    SUBCASE("indices out of range fail") {
        std::vector<std::size_t> idx{5};
        CHECK_THROWS_AS(make_batch(ds, idx, 0), ConfigError);
    }
    SUBCASE("targets are the lifted next states") {
        Batch b = make_batch_all(ds, 0);
        const auto& tr = b.trajs[0];
        const auto expect = to_net_state(ds.trajectories[0].states[1]).to_array();
        CHECK(tr.targets[0] == expect);
        CHECK(tr.inputs[1] == expect);
    }
}
