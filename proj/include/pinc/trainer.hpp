#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>

#include "pinc/autodiff.hpp"
#include "pinc/gradcombine.hpp"
#include "pinc/losses.hpp"

namespace pinc {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
};

/// Adam with decoupled weight decay: the decay scales parameters directly and
/// never enters the moment estimates.
class AdamW {
public:
    AdamW() = default;
    AdamW(std::size_t n_params, AdamWConfig cfg) : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

    void step(std::vector<double>& params, const GradientVector& grad, double lr);
    std::size_t step_count() const { return step_; }

private:
    AdamWConfig cfg_;
    std::vector<double> m_, v_;
    std::size_t step_ = 0;
};

/// Reduce-on-plateau: when the best seen loss has not improved by a relative
/// margin for `patience` consecutive evaluations, lr <- max(lr*factor, lr_min)
/// and the counter resets.
class PlateauScheduler {
public:
    PlateauScheduler(double lr0, double lr_min, double factor, int patience,
                     double rel_improvement = 1e-4)
        : lr_(lr0), lr_min_(lr_min), factor_(factor), patience_(patience),
          rel_improvement_(rel_improvement) {}

    double update(double loss) {
        if (loss < best_ * (1.0 - rel_improvement_)) {
            best_ = loss;
            counter_ = 0;
        } else {
            ++counter_;
            if (counter_ >= patience_) {
                lr_ = std::max(lr_ * factor_, lr_min_);
                counter_ = 0;
            }
        }
        return lr_;
    }

    double lr() const { return lr_; }

private:
    double lr_;
    double lr_min_;
    double factor_;
    int patience_;
    double rel_improvement_;
    double best_ = std::numeric_limits<double>::infinity();
    int counter_ = 0;
};

struct TrainConfig {
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> model_seed; // defaults to seed
    int n_epochs = 1200;
    int batch_size = 3;
    double lr0 = 8e-3;
    bool scheduler = false;
    double lr_min = 1e-4;
    int patience = 100;
    double lr_factor = 0.5;
    AdamWConfig adamw;
    std::vector<LossKind> losses = {LossKind::Data, LossKind::Physics,
                                    LossKind::InitialCondition, LossKind::Rollout,
                                    LossKind::PhysicsRollout};
    LossWeights weights;
    GradScheme grad_scheme = GradScheme::Norm;
    double clip = 5.0;
    bool clip_all_schemes = true;
    double noise_sigma = 0.0;
    bool noise_per_trajectory = false;
    int colloc_points = 0; // 0 = all stored collocation points
    bool shuffle = true;
    int checkpoint_every = 0; // epochs; 0 = only the final checkpoint
    int jobs = 1;             // >1 shards gradient work across threads

    void validate() const;
    bool loss_active(LossKind k) const;
    std::vector<LossKind> active_losses_in_order() const;

    ModelConfig model;
};

/// One row of the training log. Inactive losses are NaN.
struct EpochRecord {
    int epoch = 0;
    double log10_data = std::numeric_limits<double>::quiet_NaN();
    double log10_phy = std::numeric_limits<double>::quiet_NaN();
    double log10_ic = std::numeric_limits<double>::quiet_NaN();
    double log10_roll = std::numeric_limits<double>::quiet_NaN();
    double log10_phyroll = std::numeric_limits<double>::quiet_NaN();
    double log10_dev = std::numeric_limits<double>::quiet_NaN();
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainCallbacks {
    std::function<void(const ModelParams&, const std::string& tag)> checkpoint;
    std::function<void(const EpochRecord&)> on_epoch;
};

/// log10 with zero/negative floored to -12 (reporting convention).
double log10_floored(double x);

/// Adds N(0, sigma^2) noise to every state component of every network input
/// point; controls, collocation times and all targets stay untouched.
/// per_trajectory draws one 9-vector per trajectory instead.
void inject_noise(Batch& batch, double sigma, Rng& rng, bool per_trajectory = false);

/// Values of the active losses (in canonical order data, phy, ic, roll,
/// phy_roll) and the combined, clipped update gradient for one batch.
std::pair<std::vector<double>, GradientVector> combined_gradient(const ModelParams& params,
                                                                 const Batch& batch,
                                                                 const TrainConfig& cfg,
                                                                 GradWorkspace& ws);

/// Full training loop; deterministic for a fixed config and seed.
/// On a non-finite loss the checkpoint callback receives the last finite
/// parameters with tag "last_finite" and a NumericError with epoch/batch
/// context is thrown.
std::pair<ModelParams, TrainHistory> train(const Dataset& train_ds, const Dataset& dev_ds,
                                           const TrainConfig& cfg,
                                           const TrainCallbacks& callbacks = {});

inline constexpr const char* kMetricsHeader =
    "epoch,log10_L_data,log10_L_phy,log10_L_ic,log10_L_roll,log10_L_phyroll,"
    "log10_L_dev,lr,seconds";

void write_metrics_csv(const std::filesystem::path& file, const TrainHistory& history);

} // namespace pinc
