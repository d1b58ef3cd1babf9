#include "pinc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace pinc {

void AdamW::step(std::vector<double>& params, const GradientVector& grad, double lr) {
    if (params.size() != grad.size()) {
        throw ConfigError("adamw: parameter/gradient size mismatch");
    }
    if (m_.size() != params.size()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
        step_ = 0;
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const double decay = 1.0 - lr * cfg_.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params[i] = params[i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
}

void TrainConfig::validate() const {
    if (n_epochs < 0) throw ConfigError("train: n_epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be > 0");
    if (scheduler) {
        if (!(lr0 > lr_min) || !(lr_min > 0.0)) {
            throw ConfigError("train: need lr0 > lr_min > 0");
        }
        if (patience < 1) throw ConfigError("train: patience must be >= 1");
        if (!(lr_factor > 0.0 && lr_factor < 1.0)) {
            throw ConfigError("train: lr_factor must be in (0, 1)");
        }
    }
    if (noise_sigma < 0.0) throw ConfigError("train: noise_sigma must be >= 0");
    if (colloc_points < 0) throw ConfigError("train: colloc_points must be >= 0");
    if (jobs < 1) throw ConfigError("train: jobs must be >= 1");
    if (losses.empty()) throw ConfigError("train: at least one loss must be active");
    weights.validate();
    model.validate();
}

bool TrainConfig::loss_active(LossKind k) const {
    for (LossKind l : losses) {
        if (l == k) return true;
    }
    return false;
}

std::vector<LossKind> TrainConfig::active_losses_in_order() const {
    std::vector<LossKind> out;
    for (LossKind k : {LossKind::Data, LossKind::Physics, LossKind::InitialCondition,
                       LossKind::Rollout, LossKind::PhysicsRollout}) {
        if (loss_active(k)) out.push_back(k);
    }
    return out;
}

double log10_floored(double x) {
    if (!(x > 0.0)) return -12.0;
    return std::max(std::log10(x), -12.0);
}

void inject_noise(Batch& batch, double sigma, Rng& rng, bool per_trajectory) {
    if (sigma == 0.0) return;
    for (auto& tr : batch.trajs) {
        if (per_trajectory) {
            std::array<double, 9> eps;
            for (double& e : eps) e = rng.normal(0.0, sigma);
            for (auto& point : tr.inputs) {
                for (int i = 0; i < 9; ++i) point[i] += eps[i];
            }
        } else {
            for (auto& point : tr.inputs) {
                for (int i = 0; i < 9; ++i) point[i] += rng.normal(0.0, sigma);
            }
        }
    }
}

namespace {

/// Gradient evaluation with shards chunked over `jobs` threads; chunk sums
/// are merged in chunk order so a fixed config yields fixed results.
std::pair<double, GradientVector> loss_gradient_jobs(const ModelParams& params,
                                                     const ShardedLoss& loss,
                                                     GradWorkspace& ws, int jobs) {
    if (jobs <= 1 || loss.shards < 2) return loss_gradient(params, loss, ws);
    const int n_chunks = std::min<int>(jobs, static_cast<int>(loss.shards));
    struct ChunkOut {
        double sum = 0.0;
        std::size_t count = 0;
        GradientVector grad;
        std::string error;
    };
    std::vector<ChunkOut> outs(n_chunks);
    std::vector<std::thread> threads;
    const std::size_t per = (loss.shards + n_chunks - 1) / n_chunks;
    for (int c = 0; c < n_chunks; ++c) {
        threads.emplace_back([&, c]() {
            GradWorkspace local;
            ChunkOut& out = outs[c];
            out.grad.assign(params.flat.size(), 0.0);
            const std::size_t lo = c * per;
            const std::size_t hi = std::min(loss.shards, lo + per);
            try {
                for (std::size_t shard = lo; shard < hi; ++shard) {
                    local.tape.clear();
                    local.theta.clear();
                    for (double p : params.flat) local.theta.push_back(local.tape.leaf(p));
                    ParamView<Var> pv{&params.layout, local.theta.data()};
                    auto [sq, count] = loss.eval(shard, pv);
                    if (!std::isfinite(sq.val)) {
                        throw NumericError("loss " + loss.name + ": non-finite value");
                    }
                    out.sum += sq.val;
                    out.count += count;
                    if (!sq.is_const()) {
                        local.tape.backward(sq, local.adjoint);
                        for (std::size_t i = 0; i < out.grad.size(); ++i) {
                            out.grad[i] += local.adjoint[i];
                        }
                    }
                }
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& out : outs) {
        if (!out.error.empty()) throw NumericError(out.error);
    }
    GradientVector grad(params.flat.size(), 0.0);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& out : outs) {
        sum += out.sum;
        count += out.count;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += out.grad[i];
    }
    if (count == 0) throw ConfigError("loss " + loss.name + ": no terms to average");
    const double inv = 1.0 / static_cast<double>(count);
    for (double& g : grad) {
        g *= inv;
        if (!std::isfinite(g)) throw NumericError("loss " + loss.name + ": non-finite gradient");
    }
    return {sum * inv, grad};
}

} // namespace

std::pair<std::vector<double>, GradientVector> combined_gradient(const ModelParams& params,
                                                                 const Batch& batch,
                                                                 const TrainConfig& cfg,
                                                                 GradWorkspace& ws) {
    std::vector<double> values;
    std::vector<GradientVector> grads;
    std::vector<double> weights;
    for (LossKind kind : cfg.active_losses_in_order()) {
        auto sharded = make_sharded_loss(kind, params, batch, cfg.weights.n_pred);
        auto [value, grad] = loss_gradient_jobs(params, sharded, ws, cfg.jobs);
        values.push_back(value);
        grads.push_back(std::move(grad));
        weights.push_back(cfg.weights.weight(kind));
    }
    GradientVector combined;
    switch (cfg.grad_scheme) {
        case GradScheme::Sum: combined = sum_combine(grads, weights); break;
        case GradScheme::ConFIG: combined = config_combine(grads); break;
        case GradScheme::Norm: combined = norm_combine(grads, weights); break;
    }
    if (cfg.clip > 0.0 && (cfg.clip_all_schemes || cfg.grad_scheme == GradScheme::Norm)) {
        combined = clip_norm(std::move(combined), cfg.clip);
    }
    return {std::move(values), std::move(combined)};
}

std::pair<ModelParams, TrainHistory> train(const Dataset& train_ds, const Dataset& dev_ds,
                                           const TrainConfig& cfg,
                                           const TrainCallbacks& callbacks) {
    cfg.validate();
    if (train_ds.trajectories.empty()) throw ConfigError("train: empty training dataset");
    if (dev_ds.trajectories.empty()) throw ConfigError("train: empty dev dataset");

    ModelParams params = init_params(cfg.model, cfg.model_seed.value_or(cfg.seed));
    TrainHistory history;
    if (cfg.n_epochs == 0) return {params, history};

    const Batch dev_batch = make_batch_all(dev_ds, 0);
    AdamW optimizer(params.flat.size(), cfg.adamw);
    PlateauScheduler sched(cfg.lr0, cfg.lr_min, cfg.lr_factor, cfg.patience);
    GradWorkspace ws;
    Rng shuffle_rng(Rng::splitmix64(cfg.seed ^ 0x9e3779b97f4a7c15ULL));
    Rng noise_rng(Rng::splitmix64(cfg.seed ^ 0x517cc1b727220a95ULL));

    std::vector<std::size_t> order(train_ds.trajectories.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto active = cfg.active_losses_in_order();
    double lr = cfg.lr0;
    std::vector<double> last_finite = params.flat;

    for (int epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (cfg.shuffle) shuffle_rng.shuffle(order);

        std::vector<double> loss_sums(active.size(), 0.0);
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> indices(order.data() + start, end - start);
            Batch batch = make_batch(train_ds, indices, cfg.colloc_points);
            if (cfg.noise_sigma > 0.0) {
                inject_noise(batch, cfg.noise_sigma, noise_rng, cfg.noise_per_trajectory);
            }
            last_finite = params.flat;
            try {
                auto [values, combined] = combined_gradient(params, batch, cfg, ws);
                for (std::size_t i = 0; i < values.size(); ++i) loss_sums[i] += values[i];
                optimizer.step(params.flat, combined, lr);
            } catch (const NumericError& e) {
                params.flat = last_finite;
                if (callbacks.checkpoint) callbacks.checkpoint(params, "last_finite");
                throw NumericError("train: epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(n_batches + 1) + ": " + e.what());
            }
            ++n_batches;
        }

        const double dev_loss = data_loss(params, dev_batch);

        EpochRecord rec;
        rec.epoch = epoch;
        for (std::size_t i = 0; i < active.size(); ++i) {
            const double mean = loss_sums[i] / static_cast<double>(n_batches);
            switch (active[i]) {
                case LossKind::Data: rec.log10_data = log10_floored(mean); break;
                case LossKind::Physics: rec.log10_phy = log10_floored(mean); break;
                case LossKind::InitialCondition: rec.log10_ic = log10_floored(mean); break;
                case LossKind::Rollout: rec.log10_roll = log10_floored(mean); break;
                case LossKind::PhysicsRollout: rec.log10_phyroll = log10_floored(mean); break;
            }
        }
        rec.log10_dev = log10_floored(dev_loss);
        rec.lr = lr;
        if (cfg.scheduler) lr = sched.update(dev_loss);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count();
        history.epochs.push_back(rec);
        if (callbacks.on_epoch) callbacks.on_epoch(rec);
        if (callbacks.checkpoint && cfg.checkpoint_every > 0 &&
            epoch % cfg.checkpoint_every == 0 && epoch != cfg.n_epochs) {
            callbacks.checkpoint(params, "epoch" + std::to_string(epoch));
        }
    }
    return {params, history};
}

namespace {

std::string metric_cell(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_metrics_csv(const std::filesystem::path& file, const TrainHistory& history) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write metrics file " + file.string());
    os << kMetricsHeader << "\n";
    for (const auto& r : history.epochs) {
        char sec[32];
        std::snprintf(sec, sizeof(sec), "%.3f", r.seconds);
        os << r.epoch << ',' << metric_cell(r.log10_data) << ',' << metric_cell(r.log10_phy)
           << ',' << metric_cell(r.log10_ic) << ',' << metric_cell(r.log10_roll) << ','
           << metric_cell(r.log10_phyroll) << ',' << metric_cell(r.log10_dev) << ','
           << metric_cell(r.lr) << ',' << sec << "\n";
    }
}

} // namespace pinc
