#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pinc/dual.hpp"
#include "pinc/tape.hpp"
#include "pinc/types.hpp"

namespace pinc {

enum class Activation { AdaptiveTanh, AdaptiveSoftplus };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Architectural switches of the network. The ablation experiments are pure
/// config changes (residual connection, rotation, normalization, activation).
struct ModelConfig {
    int n_hidden_layers = 4; // N_L
    int hidden_width = 32;   // N_H
    Activation activation = Activation::AdaptiveSoftplus;
    bool layer_norm_every_2nd = true;
    bool residual_connection = true;
    bool rotate_planar_increments = true;
    bool renormalize_yaw_on_rollout = false;

    void validate() const {
        if (n_hidden_layers < 1) throw ConfigError("model: n_hidden_layers must be >= 1");
        if (hidden_width < 1) throw ConfigError("model: hidden_width must be >= 1");
    }

    /// Layer normalization sits on layers 2, 4, ... (1-indexed), applied to
    /// the affine output before the activation.
    bool layer_normalized(int layer) const {
        return layer_norm_every_2nd && ((layer + 1) % 2 == 0);
    }
};

inline constexpr int kInputDim = kNetStateDim + kControlDim + 1; // state, control, time
inline constexpr const char* kParamOrderingTag = "pinc-params-v1";

/// Offsets of each parameter group inside the flat vector. The ordering is
/// the checkpoint contract: per hidden layer W (row-major), b, beta, then
/// layer-norm gain/offset when present; finally the output layer W, b.
struct ParamLayout {
    struct Layer {
        std::size_t w = 0;
        std::size_t b = 0;
        std::size_t beta = 0;
        std::size_t gain = 0;
        std::size_t offset = 0;
        int in_dim = 0;
        bool normalized = false;
    };
    int hidden = 0;
    std::vector<Layer> layers;
    std::size_t out_w = 0;
    std::size_t out_b = 0;
    std::size_t total = 0;

    static ParamLayout make(const ModelConfig& cfg) {
        cfg.validate();
        ParamLayout L;
        L.hidden = cfg.hidden_width;
        std::size_t off = 0;
        int in_dim = kInputDim;
        for (int l = 0; l < cfg.n_hidden_layers; ++l) {
            Layer lay;
            lay.in_dim = in_dim;
            lay.normalized = cfg.layer_normalized(l);
            lay.w = off;
            off += static_cast<std::size_t>(cfg.hidden_width) * in_dim;
            lay.b = off;
            off += cfg.hidden_width;
            lay.beta = off;
            off += 1;
            if (lay.normalized) {
                lay.gain = off;
                off += cfg.hidden_width;
                lay.offset = off;
                off += cfg.hidden_width;
            }
            L.layers.push_back(lay);
            in_dim = cfg.hidden_width;
        }
        L.out_w = off;
        off += static_cast<std::size_t>(kNetStateDim) * in_dim;
        L.out_b = off;
        off += kNetStateDim;
        L.total = off;
        return L;
    }
};

/// Typed window into a flat parameter vector (double for evaluation, Var
/// when recording gradients).
template <class P>
struct ParamView {
    const ParamLayout* layout = nullptr;
    const P* data = nullptr;

    std::span<const P> w_row(int l, int i) const {
        const auto& lay = layout->layers[l];
        return {data + lay.w + static_cast<std::size_t>(i) * lay.in_dim,
                static_cast<std::size_t>(lay.in_dim)};
    }
    const P& b(int l, int i) const { return data[layout->layers[l].b + i]; }
    const P& beta(int l) const { return data[layout->layers[l].beta]; }
    std::span<const P> gain(int l) const {
        return {data + layout->layers[l].gain, static_cast<std::size_t>(layout->hidden)};
    }
    std::span<const P> offset(int l) const {
        return {data + layout->layers[l].offset, static_cast<std::size_t>(layout->hidden)};
    }
    std::span<const P> out_row(int o) const {
        const int in_dim = layout->layers.empty() ? kInputDim : layout->hidden;
        return {data + layout->out_w + static_cast<std::size_t>(o) * in_dim,
                static_cast<std::size_t>(in_dim)};
    }
    const P& out_b(int o) const { return data[layout->out_b + o]; }
};

/// All learnable arrays in one flat vector plus the config that shapes them.
struct ModelParams {
    ModelConfig config;
    ParamLayout layout;
    std::vector<double> flat;

    std::size_t size() const { return flat.size(); }
    ParamView<double> view() const { return {&layout, flat.data()}; }
};

/// Glorot-uniform weights, zero biases, beta = 1, layer-norm gain 1/offset 0.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

/// tanh(beta*x) or softplus(beta*x)/beta, overflow-safe.
template <class P, class S>
S apply_activation(const S& z, const P& beta, Activation a) {
    S bz = z * beta;
    if (a == Activation::AdaptiveTanh) {
        using std::tanh;
        return tanh(bz);
    }
    return softplus(bz) / beta;
}

inline constexpr double kLayerNormEps = 1e-12;
inline constexpr double kYawNormEps = 1e-30;

namespace detail {

template <class P, class S>
void layer_norm_inplace(std::span<S> z, std::span<const P> gain, std::span<const P> offset,
                        std::vector<double>* stats_trace) {
    const double inv_h = 1.0 / static_cast<double>(z.size());
    std::vector<S> centered(z.size());
    S mu = vsum(std::span<const S>(z.data(), z.size())) * inv_h;
    for (std::size_t i = 0; i < z.size(); ++i) centered[i] = z[i] - mu;
    std::vector<S> sq(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) sq[i] = square(centered[i]);
    S var = vsum(std::span<const S>(sq.data(), sq.size())) * inv_h;
    using std::sqrt;
    S sigma = sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < z.size(); ++i) {
        S normalized = centered[i] / sigma;
        if constexpr (std::is_same_v<S, double>) {
            if (stats_trace) stats_trace->push_back(normalized);
        }
        z[i] = normalized * gain[i] + offset[i];
    }
    (void)stats_trace;
}

} // namespace detail

/// Optional inspection hook: collects the post-normalization, pre-gain
/// activations of every normalized layer (plain-double forward only).
struct ForwardTrace {
    std::vector<std::vector<double>> ln_normalized; // one vector per normalized layer
};

/// Trunk + structural head. Input is [ns0 (9), u (4), t]; the raw 9 increments
/// get the planar rotation by the predicted yaw, then the residual connection
/// adds the input state. S is the activation scalar (double, Var, Dual<...>),
/// P the parameter scalar (double or Var).
template <class P, class S>
std::array<S, 9> forward_generic(const ModelConfig& cfg, const ParamView<P>& pv,
                                 const std::array<S, 9>& ns0, const ControlInput& u,
                                 const S& t, ForwardTrace* trace = nullptr) {
    std::array<S, kInputDim> input;
    for (int i = 0; i < kNetStateDim; ++i) input[i] = ns0[i];
    const auto uarr = u.to_array();
    for (int i = 0; i < kControlDim; ++i) input[kNetStateDim + i] = make_scalar<S>(uarr[i]);
    input[kInputDim - 1] = t;

    const int n_layers = static_cast<int>(pv.layout->layers.size());
    const int hidden = pv.layout->hidden;
    std::vector<S> z(hidden), act(hidden);
    const S* cur = input.data();
    int cur_dim = kInputDim;
    for (int l = 0; l < n_layers; ++l) {
        for (int i = 0; i < hidden; ++i) {
            z[i] = dot_affine(pv.w_row(l, i), std::span<const S>(cur, cur_dim), pv.b(l, i));
        }
        if (pv.layout->layers[l].normalized) {
            std::vector<double>* stats = nullptr;
            if (trace) {
                trace->ln_normalized.emplace_back();
                stats = &trace->ln_normalized.back();
            }
            detail::layer_norm_inplace<P, S>(std::span<S>(z.data(), z.size()), pv.gain(l),
                                             pv.offset(l), stats);
        }
        for (int i = 0; i < hidden; ++i) {
            act[i] = apply_activation(z[i], pv.beta(l), cfg.activation);
            if (!std::isfinite(scalar_value(act[i]))) {
                throw NumericError("forward: non-finite activation in hidden layer " +
                                   std::to_string(l + 1));
            }
        }
        cur = act.data();
        cur_dim = hidden;
    }

    std::array<S, 9> inc;
    for (int o = 0; o < kNetStateDim; ++o) {
        inc[o] = dot_affine(pv.out_row(o), std::span<const S>(cur, cur_dim), pv.out_b(o));
    }

    // predicted yaw pair (after the residual addition when enabled)
    S c_pred = cfg.residual_connection ? ns0[3] + inc[3] : inc[3];
    S s_pred = cfg.residual_connection ? ns0[4] + inc[4] : inc[4];

    S dx = inc[0];
    S dy = inc[1];
    if (cfg.rotate_planar_increments) {
        using std::sqrt;
        S nrm = sqrt(square(c_pred) + square(s_pred) + kYawNormEps);
        S ch = c_pred / nrm;
        S sh = s_pred / nrm;
        dx = ch * inc[0] - sh * inc[1];
        dy = sh * inc[0] + ch * inc[1];
    }

    std::array<S, 9> out = {dx, dy, inc[2], inc[3], inc[4], inc[5], inc[6], inc[7], inc[8]};
    if (cfg.residual_connection) {
        for (int i = 0; i < kNetStateDim; ++i) out[i] = ns0[i] + out[i];
    }
    for (int i = 0; i < kNetStateDim; ++i) {
        if (!std::isfinite(scalar_value(out[i]))) {
            throw NumericError("forward: non-finite model output");
        }
    }
    return out;
}

/// One network evaluation at time t (plain double path).
NetState forward(const ModelParams& params, const NetState& ns0, const ControlInput& u,
                 double t, ForwardTrace* trace = nullptr);

/// Network output and its exact derivative with respect to the time input
/// (forward-mode dual with seed tangent 1 on t).
std::pair<NetState, std::array<double, 9>> forward_with_time_derivative(
    const ModelParams& params, const NetState& ns0, const ControlInput& u, double t);

/// Forward evaluated at t = T: the one-step prediction.
NetState predict_step(const ModelParams& params, const NetState& s, const ControlInput& u,
                      double T);
NetState predict_step(const ModelParams& params, const StateVector& s, const ControlInput& u,
                      double T);

/// Autoregressive chain of predict_step; returns the N predicted states.
/// Throws NumericError naming the failing step on non-finite output.
std::vector<NetState> rollout(const ModelParams& params, const NetState& s0,
                              std::span<const ControlInput> controls, double T);

void save_checkpoint(const std::filesystem::path& file, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& file);

} // namespace pinc
