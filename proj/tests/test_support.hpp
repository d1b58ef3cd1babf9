#pragma once

// Shared fixtures for the test suites: simulator-backed oracle predictors,
// small random models and batches, and finite-difference helpers.

#include <array>
#include <cmath>
#include <functional>

#include "pinc/autodiff.hpp"
#include "pinc/datagen.hpp"
#include "pinc/dynamics.hpp"
#include "pinc/losses.hpp"
#include "pinc/model.hpp"

namespace pinc::testing {

/// Oracle predictor: the simulator's dense flow. States come from RK4 at the
/// queried time, rates are the exact ODE right-hand side at that state.
struct SimFlowEval {
    using S = double;
    PhysicalParams phys;
    int substeps = 32;

    std::array<double, 9> predict(const std::array<double, 9>& ns, const ControlInput& u,
                                  double t) const {
        if (t == 0.0) return ns;
        const StateVector s = from_net_state(NetState::from_array(ns));
        return to_net_state(integrate_step(s, u, phys, t, substeps)).to_array();
    }

    void predict_with_rate(const std::array<double, 9>& ns, const ControlInput& u, double t,
                           std::array<double, 9>& value, std::array<double, 9>& rate) const {
        value = predict(ns, u, t);
        rate = lifted_derivative<double>(std::span<const double, 9>(value), u, phys);
    }
};

/// Adds a constant offset to one component of another predictor's output.
template <class Inner>
struct OffsetEval {
    using S = double;
    Inner inner;
    int component = 0;
    double delta = 0.1;

    std::array<double, 9> predict(const std::array<double, 9>& ns, const ControlInput& u,
                                  double t) const {
        auto out = inner.predict(ns, u, t);
        out[component] += delta;
        return out;
    }

    void predict_with_rate(const std::array<double, 9>& ns, const ControlInput& u, double t,
                           std::array<double, 9>& value, std::array<double, 9>& rate) const {
        inner.predict_with_rate(ns, u, t, value, rate);
        value[component] += delta;
    }
};

/// Deterministic pseudo-random predictor; the same closed form is re-evaluated
/// by the brute-force oracle loops in the tests.
struct SyntheticEval {
    using S = double;

    static std::array<double, 9> formula(const std::array<double, 9>& ns,
                                         const ControlInput& u, double t) {
        std::array<double, 9> out;
        for (int i = 0; i < 9; ++i) {
            out[i] = std::sin(1.3 * i + 2.7 * ns[0] + 0.9 * u.X + 1.7 * t) +
                     0.25 * ns[(i + 3) % 9];
        }
        return out;
    }

    std::array<double, 9> predict(const std::array<double, 9>& ns, const ControlInput& u,
                                  double t) const {
        return formula(ns, u, t);
    }

    void predict_with_rate(const std::array<double, 9>& ns, const ControlInput& u, double t,
                           std::array<double, 9>& value, std::array<double, 9>& rate) const {
        value = formula(ns, u, t);
        for (int i = 0; i < 9; ++i) {
            rate[i] = 1.7 * std::cos(1.3 * i + 2.7 * ns[0] + 0.9 * u.X + 1.7 * t);
        }
    }
};

/// Affine-in-time predictor x0 + c*t with exact rate c.
struct AffineEval {
    using S = double;
    std::array<double, 9> slope;

    std::array<double, 9> predict(const std::array<double, 9>& ns, const ControlInput&,
                                  double t) const {
        std::array<double, 9> out;
        for (int i = 0; i < 9; ++i) out[i] = ns[i] + slope[i] * t;
        return out;
    }

    void predict_with_rate(const std::array<double, 9>& ns, const ControlInput& u, double t,
                           std::array<double, 9>& value, std::array<double, 9>& rate) const {
        value = predict(ns, u, t);
        rate = slope;
    }
};

inline GenConfig small_gen_config(std::uint64_t seed, int n_traj, int n_steps,
                                  InputKind kind = InputKind::Ramp, int n_colloc = 2) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.n_trajectories = n_traj;
    cfg.n_steps = n_steps;
    cfg.n_colloc = n_colloc;
    cfg.input.kind = kind;
    cfg.ranges.v_max = 0.2;  // exercise sway too
    cfg.ranges.r_max = 0.3;
    return cfg;
}

inline ModelParams small_model(std::uint64_t seed, int layers = 2, int width = 8,
                               Activation act = Activation::AdaptiveSoftplus) {
    ModelConfig cfg;
    cfg.n_hidden_layers = layers;
    cfg.hidden_width = width;
    cfg.activation = act;
    return init_params(cfg, seed);
}

inline void zero_output_layer(ModelParams& p) {
    const int in_dim = p.layout.layers.empty() ? kInputDim : p.config.hidden_width;
    for (int i = 0; i < kNetStateDim * in_dim; ++i) p.flat[p.layout.out_w + i] = 0.0;
    for (int i = 0; i < kNetStateDim; ++i) p.flat[p.layout.out_b + i] = 0.0;
}

/// Central-difference directional derivative of a loss at params.
inline double directional_fd(const std::function<double(const ModelParams&)>& f,
                             const ModelParams& params, const std::vector<double>& dir,
                             double h) {
    ModelParams plus = params;
    ModelParams minus = params;
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        plus.flat[i] += h * dir[i];
        minus.flat[i] -= h * dir[i];
    }
    return (f(plus) - f(minus)) / (2.0 * h);
}

} // namespace pinc::testing
