#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "pinc/datagen.hpp"
#include "pinc/losses.hpp"
#include "pinc/model.hpp"

namespace pinc {

inline constexpr double kVptThreshold = 0.05; // meters

struct VptResult {
    double mean_s = 0.0;
    double std_s = 0.0;
    std::vector<double> per_traj;
};

struct EvalSets {
    Dataset dev;
    std::optional<Dataset> interp;
    std::optional<Dataset> extrap;
};

/// log10 losses and VPT statistics per dataset split. L4/L5 and the
/// corresponding VPTs are NaN/empty when the test sets are absent.
struct EvalReport {
    double L1 = 0.0; // log10 one-step MSE, dev
    double L2 = 0.0; // log10 10-step rollout MSE, dev
    double L3 = 0.0; // log10 physics loss, dev
    double L4 = std::numeric_limits<double>::quiet_NaN(); // one-step, interp
    double L5 = std::numeric_limits<double>::quiet_NaN(); // one-step, extrap
    VptResult vpt1, vpt2, vpt3; // dev, interp, extrap
    double threshold_m = kVptThreshold;
    double horizon_s = 0.0; // dev rollout horizon
    std::string config_echo_json;
};

/// One-step MSE of the model over the whole dataset (all trajectories as one
/// batch); identical to the data loss.
double one_step_mse(const ModelParams& params, const Dataset& ds);

/// Rollout MSE over n_pred steps (the paper's 10-step metric).
double rollout_mse(const ModelParams& params, const Dataset& ds, int n_pred = 10);

/// A rollout producer maps a ground-truth trajectory to the predicted state
/// sequence (one state per interval). Tests swap in synthetic producers.
using RolloutFn = std::function<std::vector<NetState>(const Trajectory&)>;

/// Valid prediction time: roll out from the first state over all intervals
/// and return k*T for the largest k such that the position error stays within
/// the threshold for every step 1..k. 0 when the first step violates.
double vpt_rollout(const RolloutFn& roll, const Trajectory& traj,
                   double threshold = kVptThreshold);
double vpt(const ModelParams& params, const Trajectory& traj,
           double threshold = kVptThreshold);

VptResult vpt_suite_rollout(const RolloutFn& roll, const Dataset& ds,
                            double threshold = kVptThreshold);
VptResult vpt_suite(const ModelParams& params, const Dataset& ds,
                    double threshold = kVptThreshold);

/// Three evaluation sets sharing the initial-condition and sine-input
/// protocol and differing only in the sampling period:
/// dev at T, interpolation at 0.75*T, extrapolation at 1.25*T.
EvalSets build_eval_sets(const GenConfig& base, std::uint64_t seed_dev,
                         std::uint64_t seed_interp, std::uint64_t seed_extrap);

EvalReport full_report(const ModelParams& params, const EvalSets& sets);

void write_report_json(const std::filesystem::path& file, const EvalReport& report);

/// Companion CSV: per-trajectory rollout position errors over time,
/// columns set,traj,step,t,pos_error_m.
void write_rollout_errors_csv(const std::filesystem::path& file, const ModelParams& params,
                              const EvalSets& sets);

} // namespace pinc
