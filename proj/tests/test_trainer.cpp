#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "pinc/trainer.hpp"
#include "test_support.hpp"

using namespace pinc;
using namespace pinc::testing;

namespace {

Dataset tiny_train(std::uint64_t seed = 0, int n_traj = 6, int n_steps = 12) {
    return generate_dataset(small_gen_config(seed, n_traj, n_steps, InputKind::Ramp, 1));
}

Dataset tiny_dev(std::uint64_t seed = 1, int n_traj = 3, int n_steps = 12) {
    GenConfig cfg = small_gen_config(seed, n_traj, n_steps, InputKind::Sine, 1);
    cfg.ranges = SamplingRanges{0, 0, 0, kPi, 0, 0, 0, 0};
    return generate_dataset(cfg);
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.n_epochs = 3;
    cfg.batch_size = 2;
    cfg.losses = {LossKind::Data, LossKind::Physics};
    cfg.weights.n_pred = 3;
    cfg.model.n_hidden_layers = 2;
    cfg.model.hidden_width = 8;
    return cfg;
}

} // namespace

TEST_CASE("inject_noise") {
    Batch b = make_batch_all(tiny_train());
    SUBCASE("sigma = 0 leaves the batch untouched") {
        Batch noisy = b;
        Rng rng(1);
        inject_noise(noisy, 0.0, rng);
        for (std::size_t t = 0; t < b.trajs.size(); ++t) {
            CHECK(noisy.trajs[t].inputs == b.trajs[t].inputs);
        }
    }
    SUBCASE("targets and collocation stay clean") {
        Batch noisy = b;
        Rng rng(2);
        inject_noise(noisy, 0.5, rng);
        for (std::size_t t = 0; t < b.trajs.size(); ++t) {
            CHECK(noisy.trajs[t].targets == b.trajs[t].targets);
            CHECK(noisy.trajs[t].ic_targets == b.trajs[t].ic_targets);
            CHECK(noisy.trajs[t].colloc == b.trajs[t].colloc);
            CHECK(noisy.trajs[t].inputs != b.trajs[t].inputs);
        }
    }
    SUBCASE("sample standard deviation is close to sigma") {
        Dataset big = tiny_train(5, 40, 40);
        Batch clean = make_batch_all(big);
        Batch noisy = clean;
        Rng rng(3);
        const double sigma = 0.05;
        inject_noise(noisy, sigma, rng);
        double sq = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < clean.trajs.size(); ++t) {
            for (int p = 0; p < clean.trajs[t].n_points(); ++p) {
                for (int i = 0; i < 9; ++i) {
                    const double d = noisy.trajs[t].inputs[p][i] - clean.trajs[t].inputs[p][i];
                    sq += d * d;
                    ++n;
                }
            }
        }
        REQUIRE(n > 100000);
        CHECK(std::sqrt(sq / n) == doctest::Approx(sigma).epsilon(0.03));
    }
    SUBCASE("per-trajectory granularity shares one vector within a trajectory") {
        Batch noisy = b;
        Rng rng(4);
        inject_noise(noisy, 0.1, rng, true);
        for (std::size_t t = 0; t < b.trajs.size(); ++t) {
            std::array<double, 9> eps;
            for (int i = 0; i < 9; ++i) {
                eps[i] = noisy.trajs[t].inputs[0][i] - b.trajs[t].inputs[0][i];
            }
            for (int p = 1; p < b.trajs[t].n_points(); ++p) {
                for (int i = 0; i < 9; ++i) {
                    CHECK(noisy.trajs[t].inputs[p][i] - b.trajs[t].inputs[p][i] ==
                          doctest::Approx(eps[i]).epsilon(1e-15));
                }
            }
        }
    }
}

TEST_CASE("adamw update rule") {
    SUBCASE("zero gradient and zero decay leave parameters unchanged") {
        AdamWConfig cfg;
        cfg.weight_decay = 0.0;
        AdamW opt(2, cfg);
        std::vector<double> params{1.5, -2.0};
        opt.step(params, {0.0, 0.0}, 1e-2);
        CHECK(params[0] == 1.5);
        CHECK(params[1] == -2.0);
    }
    SUBCASE("zero gradient with decay scales by (1 - lr*lambda)") {
        AdamWConfig cfg;
        cfg.weight_decay = 0.1;
        AdamW opt(2, cfg);
        std::vector<double> params{1.0, -4.0};
        opt.step(params, {0.0, 0.0}, 0.5);
        CHECK(params[0] == doctest::Approx(1.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));
        CHECK(params[1] == doctest::Approx(-4.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));
    }
    SUBCASE("single step with g = 1 matches the hand-computed update") {
        AdamWConfig cfg;
        cfg.weight_decay = 0.0;
        AdamW opt(1, cfg);
        std::vector<double> params{2.0};
        const double lr = 1e-2;
        opt.step(params, {1.0}, lr);
        // m_hat = v_hat = 1 after bias correction => delta = -lr / (1 + eps)
        CHECK(params[0] == doctest::Approx(2.0 - lr / (1.0 + cfg.eps)).epsilon(1e-15));
    }
}

TEST_CASE("plateau scheduler") {
    SUBCASE("100 non-improving epochs halve the rate") {
        PlateauScheduler sched(8e-3, 1e-4, 0.5, 100);
        sched.update(1.0); // becomes the best
        for (int i = 0; i < 99; ++i) {
            CHECK(sched.update(1.0) == 8e-3);
        }
        CHECK(sched.update(1.0) == doctest::Approx(4e-3));
    }
    SUBCASE("the floor holds under continued plateaus") {
        PlateauScheduler sched(8e-3, 1e-4, 0.5, 2);
        sched.update(1.0);
        for (int i = 0; i < 100; ++i) sched.update(1.0);
        CHECK(sched.lr() == doctest::Approx(1e-4));
        for (int i = 0; i < 10; ++i) sched.update(1.0);
        CHECK(sched.lr() == doctest::Approx(1e-4));
    }
    SUBCASE("strictly improving losses never change the rate") {
        PlateauScheduler sched(8e-3, 1e-4, 0.5, 3);
        double loss = 1.0;
        for (int i = 0; i < 50; ++i) {
            loss *= 0.9;
            CHECK(sched.update(loss) == 8e-3);
        }
    }
    SUBCASE("sub-threshold improvements count as plateaus") {
        PlateauScheduler sched(8e-3, 1e-4, 0.5, 5);
        double loss = 1.0;
        sched.update(loss);
        for (int i = 0; i < 5; ++i) {
            loss *= (1.0 - 1e-6); // below the relative 1e-4 margin
            sched.update(loss);
        }
        CHECK(sched.lr() == doctest::Approx(4e-3));
    }
}

TEST_CASE("train basics") {
    Dataset train_ds = tiny_train();
    Dataset dev_ds = tiny_dev();
    SUBCASE("zero epochs returns the initial params and empty history") {
        TrainConfig cfg = tiny_config();
        cfg.n_epochs = 0;
        auto [params, history] = train(train_ds, dev_ds, cfg);
        CHECK(history.epochs.empty());
        const ModelParams fresh = init_params(cfg.model, cfg.seed);
        CHECK(params.flat == fresh.flat);
    }
    SUBCASE("deterministic: identical runs produce identical history and params") {
        TrainConfig cfg = tiny_config();
        auto [p1, h1] = train(train_ds, dev_ds, cfg);
        auto [p2, h2] = train(train_ds, dev_ds, cfg);
        CHECK(p1.flat == p2.flat);
        REQUIRE(h1.epochs.size() == h2.epochs.size());
        for (std::size_t i = 0; i < h1.epochs.size(); ++i) {
            CHECK(h1.epochs[i].log10_data == h2.epochs[i].log10_data);
            CHECK(h1.epochs[i].log10_dev == h2.epochs[i].log10_dev);
            CHECK(h1.epochs[i].lr == h2.epochs[i].lr);
        }
    }
    SUBCASE("learning rate sequence is non-increasing and floored") {
        TrainConfig cfg = tiny_config();
        cfg.n_epochs = 12;
        cfg.scheduler = true;
        cfg.patience = 2;
        cfg.lr_min = 2e-3;
        auto [params, history] = train(train_ds, dev_ds, cfg);
        double prev = cfg.lr0;
        for (const auto& rec : history.epochs) {
            CHECK(rec.lr <= prev + 1e-18);
            CHECK(rec.lr >= cfg.lr_min - 1e-18);
            prev = rec.lr;
        }
    }
    SUBCASE("noise leaves dev evaluation and targets clean") {
        TrainConfig cfg = tiny_config();
        cfg.n_epochs = 1;
        cfg.noise_sigma = 2.0;
        cfg.shuffle = false;
        auto [params, history] = train(train_ds, dev_ds, cfg);
        const double dev = data_loss(params, make_batch_all(dev_ds));
        CHECK(history.epochs.back().log10_dev ==
              doctest::Approx(log10_floored(dev)).epsilon(1e-12));
    }
    SUBCASE("per-epoch records carry the active losses only") {
        TrainConfig cfg = tiny_config();
        cfg.losses = {LossKind::Data};
        cfg.n_epochs = 1;
        auto [params, history] = train(train_ds, dev_ds, cfg);
        const auto& rec = history.epochs.front();
        CHECK(std::isfinite(rec.log10_data));
        CHECK(std::isnan(rec.log10_phy));
        CHECK(std::isnan(rec.log10_ic));
        CHECK(std::isnan(rec.log10_roll));
        CHECK(std::isnan(rec.log10_phyroll));
    }
}

TEST_CASE("disabling a loss removes exactly its contribution") {
    Dataset train_ds = tiny_train();
    Batch batch = make_batch_all(train_ds);
    TrainConfig cfg = tiny_config();
    cfg.losses = {LossKind::Data, LossKind::Physics, LossKind::InitialCondition};
    ModelParams params = init_params(cfg.model, 3);
    GradWorkspace ws;

    auto [values, combined] = combined_gradient(params, batch, cfg, ws);
    REQUIRE(values.size() == 3);

    // rebuild by hand from individual gradients
    auto [vd, gd] = loss_value_and_grad(LossKind::Data, params, batch, cfg.weights.n_pred, ws);
    auto [vp, gp] = loss_value_and_grad(LossKind::Physics, params, batch, cfg.weights.n_pred, ws);
    auto [vi, gi] = loss_value_and_grad(LossKind::InitialCondition, params, batch,
                                        cfg.weights.n_pred, ws);
    std::vector<GradientVector> grads{gd, gp, gi};
    std::vector<double> w{cfg.weights.w_data, cfg.weights.w_phy, cfg.weights.w_ic};
    GradientVector manual = clip_norm(norm_combine(grads, w), cfg.clip);
    for (std::size_t i = 0; i < manual.size(); ++i) {
        CHECK(combined[i] == doctest::Approx(manual[i]).epsilon(1e-12).scale(1.0));
    }

    // drop the ic loss: the combination must equal the scheme on the remaining set
    cfg.losses = {LossKind::Data, LossKind::Physics};
    auto [values2, combined2] = combined_gradient(params, batch, cfg, ws);
    std::vector<GradientVector> grads2{gd, gp};
    std::vector<double> w2{cfg.weights.w_data, cfg.weights.w_phy};
    GradientVector manual2 = clip_norm(norm_combine(grads2, w2), cfg.clip);
    for (std::size_t i = 0; i < manual2.size(); ++i) {
        CHECK(combined2[i] == doctest::Approx(manual2[i]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("parallel shard evaluation matches the serial gradient") {
    Dataset train_ds = tiny_train(7, 4, 10);
    Batch batch = make_batch_all(train_ds);
    TrainConfig cfg = tiny_config();
    ModelParams params = init_params(cfg.model, 9);
    GradWorkspace ws;
    auto [v1, g1] = combined_gradient(params, batch, cfg, ws);
    cfg.jobs = 2;
    auto [v2, g2] = combined_gradient(params, batch, cfg, ws);
    REQUIRE(v1.size() == v2.size());
    for (std::size_t i = 0; i < v1.size(); ++i) {
        CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-13));
    }
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("metrics csv layout") {
    TrainHistory history;
    EpochRecord rec;
    rec.epoch = 1;
    rec.log10_data = -2.5;
    rec.log10_dev = -3.0;
    rec.lr = 8e-3;
    rec.seconds = 0.125;
    history.epochs.push_back(rec);
    const auto file = std::filesystem::temp_directory_path() / "pinc_metrics_test.csv";
    write_metrics_csv(file, history);
    std::ifstream is(file);
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header ==
          "epoch,log10_L_data,log10_L_phy,log10_L_ic,log10_L_roll,log10_L_phyroll,"
          "log10_L_dev,lr,seconds");
    CHECK(row == "1,-2.5,,,,,-3,0.0080000000000000002,0.125");
    std::filesystem::remove(file);
}

TEST_CASE("tiny run learns: dev loss drops by an order of magnitude") {
    GenConfig gcfg = small_gen_config(0, 8, 16, InputKind::Ramp, 1);
    Dataset train_ds = generate_dataset(gcfg);
    Dataset dev_ds = tiny_dev(1, 3, 16);
    TrainConfig cfg;
    cfg.seed = 0;
    cfg.n_epochs = 60;
    cfg.batch_size = 4;
    cfg.losses = {LossKind::Data};
    cfg.grad_scheme = GradScheme::Norm;
    cfg.model.n_hidden_layers = 2;
    cfg.model.hidden_width = 16;
    auto [params, history] = train(train_ds, dev_ds, cfg);
    REQUIRE_FALSE(history.epochs.empty());
    const double first = history.epochs.front().log10_dev;
    const double last = history.epochs.back().log10_dev;
    CHECK(last < first - 1.0);
}
