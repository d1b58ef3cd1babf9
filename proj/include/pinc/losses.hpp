#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pinc/dataset.hpp"
#include "pinc/dynamics.hpp"
#include "pinc/model.hpp"

namespace pinc {

/// One trajectory inside a training batch, stored as transition records:
/// point n carries the lifted state fed to the network, the zero-order-hold
/// control, the lifted next state (the prediction target) and the
/// collocation times of the interval. N_D = number of transitions.
/// Noise injection perturbs `inputs` only; `targets` and `ic_targets`
/// stay clean.
struct BatchTraj {
    std::vector<std::array<double, 9>> inputs;
    std::vector<std::array<double, 9>> ic_targets;
    std::vector<std::array<double, 9>> targets;
    std::vector<ControlInput> controls;
    std::vector<std::vector<double>> colloc;

    int n_points() const { return static_cast<int>(inputs.size()); }
};

struct Batch {
    double T = 0.08;
    PhysicalParams phys;
    std::vector<BatchTraj> trajs;

    int n_trajs() const { return static_cast<int>(trajs.size()); }
    int n_points() const { return trajs.empty() ? 0 : trajs.front().n_points(); }
    int n_colloc() const {
        if (trajs.empty() || trajs.front().colloc.empty()) return 0;
        return static_cast<int>(trajs.front().colloc.front().size());
    }
};

/// Builds a batch from dataset trajectories. colloc_k = 0 keeps all stored
/// collocation points; k > 0 keeps the first k of each interval.
Batch make_batch(const Dataset& ds, std::span<const std::size_t> traj_indices,
                 int colloc_k = 0);
Batch make_batch_all(const Dataset& ds, int colloc_k = 0);

enum class LossKind { Data, Physics, InitialCondition, Rollout, PhysicsRollout };

const char* loss_name(LossKind k);
LossKind loss_from_name(const std::string& name);

/// Per-loss weights for gradient combination plus the rollout horizon.
struct LossWeights {
    double w_data = 1.0;
    double w_roll = 1.0;
    double w_phy = 0.5;
    double w_phy_roll = 0.5;
    double w_ic = 0.5;
    int n_pred = 10;

    double weight(LossKind k) const {
        switch (k) {
            case LossKind::Data: return w_data;
            case LossKind::Physics: return w_phy;
            case LossKind::InitialCondition: return w_ic;
            case LossKind::Rollout: return w_roll;
            case LossKind::PhysicsRollout: return w_phy_roll;
        }
        return 0.0;
    }

    void validate() const {
        if (w_data < 0 || w_roll < 0 || w_phy < 0 || w_phy_roll < 0 || w_ic < 0) {
            throw ConfigError("loss weights must be >= 0");
        }
        if (n_pred < 1) throw ConfigError("n_pred must be >= 1");
    }
};

/// Model-backed predictor over a generic scalar; the S = Var instantiation
/// records the tape for reverse-mode gradients. Test oracles implement the
/// same two calls with plain doubles.
template <class P>
struct ModelEval {
    using S = P;
    const ModelConfig* cfg;
    ParamView<P> pv;

    std::array<S, 9> predict(const std::array<S, 9>& ns, const ControlInput& u,
                             double t) const {
        return forward_generic<P, S>(*cfg, pv, ns, u, make_scalar<S>(t));
    }

    void predict_with_rate(const std::array<S, 9>& ns, const ControlInput& u, double t,
                           std::array<S, 9>& value, std::array<S, 9>& rate) const {
        using D = Dual<S>;
        std::array<D, 9> in;
        for (int i = 0; i < 9; ++i) in[i] = D{ns[i], make_scalar<S>(0.0)};
        auto out = forward_generic<P, D>(*cfg, pv, in, u,
                                         D{make_scalar<S>(t), make_scalar<S>(1.0)});
        for (int i = 0; i < 9; ++i) {
            value[i] = out[i].v;
            rate[i] = out[i].d;
        }
    }
};

namespace detail {

template <class S>
std::array<S, 9> lift9(const std::array<double, 9>& a) {
    std::array<S, 9> out;
    for (int i = 0; i < 9; ++i) out[i] = make_scalar<S>(a[i]);
    return out;
}

template <class S>
S sq_err9(const std::array<S, 9>& pred, const std::array<double, 9>& target) {
    std::array<S, 9> terms;
    for (int i = 0; i < 9; ++i) terms[i] = square(pred[i] - target[i]);
    return vsum(std::span<const S>(terms.data(), terms.size()));
}

} // namespace detail

/// Sum of squared one-step errors over one trajectory, with the term count.
template <class E>
std::pair<typename E::S, std::size_t> data_sq_sum(const E& eval, const BatchTraj& tr,
                                                  double T) {
    using S = typename E::S;
    S acc = make_scalar<S>(0.0);
    for (int n = 0; n < tr.n_points(); ++n) {
        auto pred = eval.predict(detail::lift9<S>(tr.inputs[n]), tr.controls[n], T);
        acc = acc + detail::sq_err9(pred, tr.targets[n]);
    }
    return {acc, static_cast<std::size_t>(tr.n_points())};
}

/// Sum of squared physics residuals over one trajectory's collocation points.
template <class E>
std::pair<typename E::S, std::size_t> physics_sq_sum(const E& eval, const PhysicalParams& p,
                                                     const BatchTraj& tr, double T) {
    using S = typename E::S;
    (void)T;
    S acc = make_scalar<S>(0.0);
    std::size_t count = 0;
    std::array<S, 9> value, rate;
    for (int n = 0; n < tr.n_points(); ++n) {
        const auto ns = detail::lift9<S>(tr.inputs[n]);
        for (double tau : tr.colloc[n]) {
            eval.predict_with_rate(ns, tr.controls[n], tau, value, rate);
            auto f = lifted_derivative<S>(std::span<const S, 9>(value), tr.controls[n], p);
            std::array<S, 9> terms;
            for (int i = 0; i < 9; ++i) terms[i] = square(rate[i] - f[i]);
            acc = acc + vsum(std::span<const S>(terms.data(), terms.size()));
            ++count;
        }
    }
    return {acc, count};
}

/// Sum of squared self-consistency errors at t = 0 over one trajectory.
template <class E>
std::pair<typename E::S, std::size_t> ic_sq_sum(const E& eval, const BatchTraj& tr) {
    using S = typename E::S;
    S acc = make_scalar<S>(0.0);
    for (int n = 0; n < tr.n_points(); ++n) {
        auto pred = eval.predict(detail::lift9<S>(tr.inputs[n]), tr.controls[n], 0.0);
        acc = acc + detail::sq_err9(pred, tr.ic_targets[n]);
    }
    return {acc, static_cast<std::size_t>(tr.n_points())};
}

/// Squared rollout errors for the rollout starting at point `start`:
/// the k-step prediction is compared against the ground truth k steps ahead,
/// k = 1..n_pred, with gradients flowing through the whole chain.
template <class E>
std::pair<typename E::S, std::size_t> rollout_sq_sum(const E& eval, const BatchTraj& tr,
                                                     double T, int start, int n_pred) {
    using S = typename E::S;
    S acc = make_scalar<S>(0.0);
    auto state = detail::lift9<S>(tr.inputs[start]);
    for (int k = 1; k <= n_pred; ++k) {
        state = eval.predict(state, tr.controls[start + k - 1], T);
        acc = acc + detail::sq_err9(state, tr.targets[start + k - 1]);
    }
    return {acc, static_cast<std::size_t>(n_pred)};
}

/// Squared physics residuals along one rollout: for rollout step i the
/// residual is evaluated at the collocation times of interval start+i with
/// the rollout's intermediate prediction as initial condition.
template <class E>
std::pair<typename E::S, std::size_t> physics_rollout_sq_sum(const E& eval,
                                                             const PhysicalParams& p,
                                                             const BatchTraj& tr, double T,
                                                             int start, int n_pred) {
    using S = typename E::S;
    S acc = make_scalar<S>(0.0);
    std::size_t count = 0;
    auto state = detail::lift9<S>(tr.inputs[start]);
    std::array<S, 9> value, rate;
    for (int i = 0; i < n_pred; ++i) {
        const ControlInput& u = tr.controls[start + i];
        for (double tau : tr.colloc[start + i]) {
            eval.predict_with_rate(state, u, tau, value, rate);
            auto f = lifted_derivative<S>(std::span<const S, 9>(value), u, p);
            std::array<S, 9> terms;
            for (int j = 0; j < 9; ++j) terms[j] = square(rate[j] - f[j]);
            acc = acc + vsum(std::span<const S>(terms.data(), terms.size()));
            ++count;
        }
        state = eval.predict(state, u, T);
    }
    return {acc, count};
}

namespace detail {

inline void require_points(const Batch& b, const char* who) {
    if (b.trajs.empty() || b.n_points() == 0) {
        throw ConfigError(std::string(who) + ": empty batch");
    }
}

inline int rollout_starts(const Batch& b, int n_pred, const char* who) {
    require_points(b, who);
    const int n_r = b.n_points() - n_pred;
    if (n_r < 1) {
        throw ConfigError(std::string(who) + ": need more than n_pred = " +
                          std::to_string(n_pred) + " points per trajectory, got " +
                          std::to_string(b.n_points()));
    }
    return n_r;
}

} // namespace detail

/// Whole-batch loss values for any predictor (used by the oracle tests).
template <class E>
double data_loss_with(const E& eval, const Batch& b) {
    detail::require_points(b, "data_loss");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : b.trajs) {
        auto [s, c] = data_sq_sum(eval, tr, b.T);
        sum += scalar_value(s);
        count += c;
    }
    return sum / static_cast<double>(count);
}

template <class E>
double physics_loss_with(const E& eval, const Batch& b) {
    detail::require_points(b, "physics_loss");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : b.trajs) {
        auto [s, c] = physics_sq_sum(eval, b.phys, tr, b.T);
        sum += scalar_value(s);
        count += c;
    }
    if (count == 0) throw ConfigError("physics_loss: batch has no collocation points");
    return sum / static_cast<double>(count);
}

template <class E>
double ic_loss_with(const E& eval, const Batch& b) {
    detail::require_points(b, "ic_loss");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : b.trajs) {
        auto [s, c] = ic_sq_sum(eval, tr);
        sum += scalar_value(s);
        count += c;
    }
    return sum / static_cast<double>(count);
}

template <class E>
double rollout_loss_with(const E& eval, const Batch& b, int n_pred) {
    const int n_r = detail::rollout_starts(b, n_pred, "rollout_loss");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : b.trajs) {
        for (int start = 0; start < n_r; ++start) {
            auto [s, c] = rollout_sq_sum(eval, tr, b.T, start, n_pred);
            sum += scalar_value(s);
            count += c;
        }
    }
    return sum / static_cast<double>(count);
}

template <class E>
double physics_rollout_loss_with(const E& eval, const Batch& b, int n_pred) {
    const int n_r = detail::rollout_starts(b, n_pred, "physics_rollout_loss");
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : b.trajs) {
        for (int start = 0; start < n_r; ++start) {
            auto [s, c] = physics_rollout_sq_sum(eval, b.phys, tr, b.T, start, n_pred);
            sum += scalar_value(s);
            count += c;
        }
    }
    if (count == 0) throw ConfigError("physics_rollout_loss: batch has no collocation points");
    return sum / static_cast<double>(count);
}

/// Model-backed loss values.
double data_loss(const ModelParams& params, const Batch& b);
double physics_loss(const ModelParams& params, const Batch& b);
double ic_loss(const ModelParams& params, const Batch& b);
double rollout_loss(const ModelParams& params, const Batch& b, int n_pred);
double physics_rollout_loss(const ModelParams& params, const Batch& b, int n_pred);

double loss_value(LossKind kind, const ModelParams& params, const Batch& b, int n_pred);

} // namespace pinc
