#include "pinc/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "pinc/trainer.hpp"

namespace pinc {

using ordered_json = nlohmann::ordered_json;

double one_step_mse(const ModelParams& params, const Dataset& ds) {
    return data_loss(params, make_batch_all(ds, 0));
}

double rollout_mse(const ModelParams& params, const Dataset& ds, int n_pred) {
    return rollout_loss(params, make_batch_all(ds, 0), n_pred);
}

double vpt_rollout(const RolloutFn& roll, const Trajectory& traj, double threshold) {
    if (traj.n_steps() < 2) throw ConfigError("vpt: trajectory needs at least 2 points");
    const std::vector<NetState> preds = roll(traj);
    const int horizon = std::min<int>(traj.n_intervals(), static_cast<int>(preds.size()));
    int valid = 0;
    for (int k = 1; k <= horizon; ++k) {
        const NetState& p = preds[k - 1];
        const StateVector& truth = traj.states[k];
        const double dx = truth.x - p.x;
        const double dy = truth.y - p.y;
        const double dz = truth.z - p.z;
        if (std::sqrt(dx * dx + dy * dy + dz * dz) > threshold) break;
        valid = k;
    }
    return static_cast<double>(valid) * traj.T;
}

namespace {

RolloutFn model_rollout_fn(const ModelParams& params) {
    return [&params](const Trajectory& traj) {
        return rollout(params, to_net_state(traj.states.front()),
                       std::span<const ControlInput>(traj.controls), traj.T);
    };
}

} // namespace

double vpt(const ModelParams& params, const Trajectory& traj, double threshold) {
    return vpt_rollout(model_rollout_fn(params), traj, threshold);
}

VptResult vpt_suite_rollout(const RolloutFn& roll, const Dataset& ds, double threshold) {
    VptResult out;
    out.per_traj.reserve(ds.trajectories.size());
    for (const auto& traj : ds.trajectories) {
        out.per_traj.push_back(vpt_rollout(roll, traj, threshold));
    }
    if (out.per_traj.empty()) return out;
    double sum = 0.0;
    for (double v : out.per_traj) sum += v;
    out.mean_s = sum / static_cast<double>(out.per_traj.size());
    double sq = 0.0;
    for (double v : out.per_traj) sq += (v - out.mean_s) * (v - out.mean_s);
    out.std_s = std::sqrt(sq / static_cast<double>(out.per_traj.size()));
    return out;
}

VptResult vpt_suite(const ModelParams& params, const Dataset& ds, double threshold) {
    return vpt_suite_rollout(model_rollout_fn(params), ds, threshold);
}

EvalSets build_eval_sets(const GenConfig& base, std::uint64_t seed_dev,
                         std::uint64_t seed_interp, std::uint64_t seed_extrap) {
    GenConfig cfg = base;
    cfg.input.kind = InputKind::Sine;
    EvalSets sets;
    cfg.seed = seed_dev;
    sets.dev = generate_dataset(cfg);
    cfg.seed = seed_interp;
    cfg.T = base.T - 0.25 * base.T;
    sets.interp = generate_dataset(cfg);
    cfg.seed = seed_extrap;
    cfg.T = base.T + 0.25 * base.T;
    sets.extrap = generate_dataset(cfg);
    return sets;
}

EvalReport full_report(const ModelParams& params, const EvalSets& sets) {
    EvalReport rep;
    rep.L1 = log10_floored(one_step_mse(params, sets.dev));
    rep.L2 = log10_floored(rollout_mse(params, sets.dev, 10));
    rep.L3 = log10_floored(physics_loss(params, make_batch_all(sets.dev, 0)));
    rep.vpt1 = vpt_suite(params, sets.dev, rep.threshold_m);
    rep.horizon_s = sets.dev.trajectories.empty()
                        ? 0.0
                        : sets.dev.trajectories.front().total_time();
    if (sets.interp) {
        rep.L4 = log10_floored(one_step_mse(params, *sets.interp));
        rep.vpt2 = vpt_suite(params, *sets.interp, rep.threshold_m);
    }
    if (sets.extrap) {
        rep.L5 = log10_floored(one_step_mse(params, *sets.extrap));
        rep.vpt3 = vpt_suite(params, *sets.extrap, rep.threshold_m);
    }
    return rep;
}

namespace {

ordered_json vpt_to_json(const VptResult& v) {
    ordered_json j;
    j["mean_s"] = v.mean_s;
    j["std_s"] = v.std_s;
    j["per_traj"] = v.per_traj;
    return j;
}

ordered_json finite_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

} // namespace

void write_report_json(const std::filesystem::path& file, const EvalReport& report) {
    ordered_json j;
    j["config_echo"] = report.config_echo_json.empty()
                           ? ordered_json::object()
                           : ordered_json::parse(report.config_echo_json);
    j["L1"] = report.L1;
    j["L2"] = report.L2;
    j["L3"] = report.L3;
    j["L4"] = finite_or_null(report.L4);
    j["L5"] = finite_or_null(report.L5);
    j["VPT1"] = vpt_to_json(report.vpt1);
    j["VPT2"] = vpt_to_json(report.vpt2);
    j["VPT3"] = vpt_to_json(report.vpt3);
    j["threshold_m"] = report.threshold_m;
    j["horizon_s"] = report.horizon_s;
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write report " + file.string());
    os << j.dump(2) << "\n";
}

namespace {

void emit_set_errors(std::ofstream& os, const std::string& name, const ModelParams& params,
                     const Dataset& ds) {
    for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
        const Trajectory& traj = ds.trajectories[t];
        const auto preds = rollout(params, to_net_state(traj.states.front()),
                                   std::span<const ControlInput>(traj.controls), traj.T);
        for (int k = 1; k <= traj.n_intervals(); ++k) {
            const NetState& p = preds[k - 1];
            const StateVector& truth = traj.states[k];
            const double dx = truth.x - p.x;
            const double dy = truth.y - p.y;
            const double dz = truth.z - p.z;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", std::sqrt(dx * dx + dy * dy + dz * dz));
            char tbuf[64];
            std::snprintf(tbuf, sizeof(tbuf), "%.17g", static_cast<double>(k) * traj.T);
            os << name << ',' << t << ',' << k << ',' << tbuf << ',' << buf << "\n";
        }
    }
}

} // namespace

void write_rollout_errors_csv(const std::filesystem::path& file, const ModelParams& params,
                              const EvalSets& sets) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write rollout errors " + file.string());
    os << "set,traj,step,t,pos_error_m\n";
    emit_set_errors(os, "dev", params, sets.dev);
    if (sets.interp) emit_set_errors(os, "interp", params, *sets.interp);
    if (sets.extrap) emit_set_errors(os, "extrap", params, *sets.extrap);
}

} // namespace pinc
