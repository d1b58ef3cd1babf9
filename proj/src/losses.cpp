#include "pinc/losses.hpp"

namespace pinc {

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Data: return "data";
        case LossKind::Physics: return "phy";
        case LossKind::InitialCondition: return "ic";
        case LossKind::Rollout: return "roll";
        case LossKind::PhysicsRollout: return "phy_roll";
    }
    return "?";
}

LossKind loss_from_name(const std::string& name) {
    if (name == "data") return LossKind::Data;
    if (name == "phy" || name == "physics") return LossKind::Physics;
    if (name == "ic") return LossKind::InitialCondition;
    if (name == "roll" || name == "rollout") return LossKind::Rollout;
    if (name == "phy_roll" || name == "phyroll") return LossKind::PhysicsRollout;
    throw ConfigError("unknown loss '" + name +
                      "' (expected data, phy, ic, roll or phy_roll)");
}

namespace {

BatchTraj batch_traj_from(const Trajectory& traj, int colloc_k) {
    const int n_d = traj.n_intervals();
    BatchTraj tr;
    tr.inputs.reserve(n_d);
    tr.targets.reserve(n_d);
    tr.controls = traj.controls;
    tr.colloc.reserve(n_d);
    for (int n = 0; n < n_d; ++n) {
        tr.inputs.push_back(to_net_state(traj.states[n]).to_array());
        tr.targets.push_back(to_net_state(traj.states[n + 1]).to_array());
        if (traj.colloc.empty()) {
            tr.colloc.emplace_back();
        } else {
            const auto& stored = traj.colloc[n];
            if (colloc_k == 0) {
                tr.colloc.push_back(stored);
            } else {
                if (static_cast<int>(stored.size()) < colloc_k) {
                    throw ConfigError("batch: dataset stores " +
                                      std::to_string(stored.size()) +
                                      " collocation points per interval, requested " +
                                      std::to_string(colloc_k));
                }
                tr.colloc.emplace_back(stored.begin(), stored.begin() + colloc_k);
            }
        }
    }
    tr.ic_targets = tr.inputs;
    return tr;
}

} // namespace

Batch make_batch(const Dataset& ds, std::span<const std::size_t> traj_indices, int colloc_k) {
    Batch b;
    b.T = ds.T;
    b.phys = ds.phys;
    b.trajs.reserve(traj_indices.size());
    for (std::size_t idx : traj_indices) {
        if (idx >= ds.trajectories.size()) {
            throw ConfigError("batch: trajectory index out of range");
        }
        b.trajs.push_back(batch_traj_from(ds.trajectories[idx], colloc_k));
    }
    for (const auto& tr : b.trajs) {
        if (tr.n_points() != b.n_points()) {
            throw ConfigError("batch: inconsistent point counts across trajectories");
        }
    }
    return b;
}

Batch make_batch_all(const Dataset& ds, int colloc_k) {
    std::vector<std::size_t> idx(ds.trajectories.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return make_batch(ds, idx, colloc_k);
}

namespace {

ModelEval<double> eval_of(const ModelParams& params) {
    return {&params.config, params.view()};
}

} // namespace

double data_loss(const ModelParams& params, const Batch& b) {
    return data_loss_with(eval_of(params), b);
}

double physics_loss(const ModelParams& params, const Batch& b) {
    return physics_loss_with(eval_of(params), b);
}

double ic_loss(const ModelParams& params, const Batch& b) {
    return ic_loss_with(eval_of(params), b);
}

double rollout_loss(const ModelParams& params, const Batch& b, int n_pred) {
    return rollout_loss_with(eval_of(params), b, n_pred);
}

double physics_rollout_loss(const ModelParams& params, const Batch& b, int n_pred) {
    return physics_rollout_loss_with(eval_of(params), b, n_pred);
}

double loss_value(LossKind kind, const ModelParams& params, const Batch& b, int n_pred) {
    switch (kind) {
        case LossKind::Data: return data_loss(params, b);
        case LossKind::Physics: return physics_loss(params, b);
        case LossKind::InitialCondition: return ic_loss(params, b);
        case LossKind::Rollout: return rollout_loss(params, b, n_pred);
        case LossKind::PhysicsRollout: return physics_rollout_loss(params, b, n_pred);
    }
    throw ConfigError("loss_value: unknown loss kind");
}

} // namespace pinc
