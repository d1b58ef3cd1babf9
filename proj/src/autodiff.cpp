#include "pinc/autodiff.hpp"

#include <cmath>

namespace pinc {

std::pair<double, GradientVector> loss_gradient(const ModelParams& params,
                                                const ShardedLoss& loss, GradWorkspace& ws) {
    const std::size_t n_params = params.flat.size();
    GradientVector grad(n_params, 0.0);
    double total_sum = 0.0;
    std::size_t total_count = 0;
    for (std::size_t shard = 0; shard < loss.shards; ++shard) {
        ws.tape.clear();
        ws.theta.clear();
        ws.theta.reserve(n_params);
        for (double p : params.flat) ws.theta.push_back(ws.tape.leaf(p));
        ParamView<Var> pv{&params.layout, ws.theta.data()};
        auto [sq, count] = loss.eval(shard, pv);
        if (!std::isfinite(sq.val)) {
            throw NumericError("loss " + loss.name + ": non-finite value in shard " +
                               std::to_string(shard));
        }
        total_sum += sq.val;
        total_count += count;
        if (!sq.is_const()) {
            ws.tape.backward(sq, ws.adjoint);
            for (std::size_t i = 0; i < n_params; ++i) grad[i] += ws.adjoint[i];
        }
    }
    if (total_count == 0) throw ConfigError("loss " + loss.name + ": no terms to average");
    const double inv = 1.0 / static_cast<double>(total_count);
    for (double& g : grad) {
        g *= inv;
        if (!std::isfinite(g)) {
            throw NumericError("loss " + loss.name + ": non-finite gradient");
        }
    }
    return {total_sum * inv, grad};
}

ShardedLoss make_sharded_loss(LossKind kind, const ModelParams& params, const Batch& batch,
                              int n_pred) {
    ShardedLoss out;
    out.name = loss_name(kind);
    const ModelConfig* cfg = &params.config;
    const Batch* b = &batch;
    switch (kind) {
        case LossKind::Data:
            out.shards = batch.trajs.size();
            out.eval = [cfg, b](std::size_t shard, const ParamView<Var>& pv) {
                ModelEval<Var> ev{cfg, pv};
                return data_sq_sum(ev, b->trajs[shard], b->T);
            };
            break;
        case LossKind::Physics:
            out.shards = batch.trajs.size();
            out.eval = [cfg, b](std::size_t shard, const ParamView<Var>& pv) {
                ModelEval<Var> ev{cfg, pv};
                return physics_sq_sum(ev, b->phys, b->trajs[shard], b->T);
            };
            break;
        case LossKind::InitialCondition:
            out.shards = batch.trajs.size();
            out.eval = [cfg, b](std::size_t shard, const ParamView<Var>& pv) {
                ModelEval<Var> ev{cfg, pv};
                return ic_sq_sum(ev, b->trajs[shard]);
            };
            break;
        case LossKind::Rollout: {
            const int n_r = detail::rollout_starts(batch, n_pred, "rollout_loss");
            out.shards = batch.trajs.size() * static_cast<std::size_t>(n_r);
            out.eval = [cfg, b, n_r, n_pred](std::size_t shard, const ParamView<Var>& pv) {
                ModelEval<Var> ev{cfg, pv};
                const std::size_t traj = shard / n_r;
                const int start = static_cast<int>(shard % n_r);
                return rollout_sq_sum(ev, b->trajs[traj], b->T, start, n_pred);
            };
            break;
        }
        case LossKind::PhysicsRollout: {
            const int n_r = detail::rollout_starts(batch, n_pred, "physics_rollout_loss");
            out.shards = batch.trajs.size() * static_cast<std::size_t>(n_r);
            out.eval = [cfg, b, n_r, n_pred](std::size_t shard, const ParamView<Var>& pv) {
                ModelEval<Var> ev{cfg, pv};
                const std::size_t traj = shard / n_r;
                const int start = static_cast<int>(shard % n_r);
                return physics_rollout_sq_sum(ev, b->phys, b->trajs[traj], b->T, start,
                                              n_pred);
            };
            break;
        }
    }
    return out;
}

std::pair<double, GradientVector> loss_value_and_grad(LossKind kind,
                                                      const ModelParams& params,
                                                      const Batch& batch, int n_pred,
                                                      GradWorkspace& ws) {
    return loss_gradient(params, make_sharded_loss(kind, params, batch, n_pred), ws);
}

} // namespace pinc
