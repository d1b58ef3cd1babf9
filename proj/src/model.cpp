#include "pinc/model.hpp"

#include <fstream>

#include <json.hpp>

#include "pinc/rng.hpp"

namespace pinc {

using ordered_json = nlohmann::ordered_json;

std::string activation_name(Activation a) {
    return a == Activation::AdaptiveTanh ? "adaptive_tanh" : "adaptive_softplus";
}

Activation activation_from_name(const std::string& name) {
    if (name == "adaptive_tanh") return Activation::AdaptiveTanh;
    if (name == "adaptive_softplus") return Activation::AdaptiveSoftplus;
    throw ConfigError("unknown activation '" + name +
                      "' (expected adaptive_tanh or adaptive_softplus)");
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams p;
    p.config = cfg;
    p.layout = ParamLayout::make(cfg);
    p.flat.assign(p.layout.total, 0.0);
    Rng rng(Rng::splitmix64(seed));
    auto glorot = [&](std::size_t off, int rows, int cols) {
        const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (int i = 0; i < rows * cols; ++i) {
            p.flat[off + i] = rng.uniform(-limit, limit);
        }
    };
    for (const auto& lay : p.layout.layers) {
        glorot(lay.w, cfg.hidden_width, lay.in_dim);
        // biases stay zero
        p.flat[lay.beta] = 1.0;
        if (lay.normalized) {
            for (int i = 0; i < cfg.hidden_width; ++i) p.flat[lay.gain + i] = 1.0;
            // offsets stay zero
        }
    }
    glorot(p.layout.out_w, kNetStateDim, cfg.hidden_width);
    return p;
}

NetState forward(const ModelParams& params, const NetState& ns0, const ControlInput& u,
                 double t, ForwardTrace* trace) {
    auto out = forward_generic<double, double>(params.config, params.view(), ns0.to_array(),
                                               u, t, trace);
    return NetState::from_array(out);
}

std::pair<NetState, std::array<double, 9>> forward_with_time_derivative(
    const ModelParams& params, const NetState& ns0, const ControlInput& u, double t) {
    using D = Dual<double>;
    std::array<D, 9> in;
    const auto a = ns0.to_array();
    for (int i = 0; i < kNetStateDim; ++i) in[i] = D{a[i], 0.0};
    auto out = forward_generic<double, D>(params.config, params.view(), in, u, D{t, 1.0});
    std::array<double, 9> value, rate;
    for (int i = 0; i < kNetStateDim; ++i) {
        value[i] = out[i].v;
        rate[i] = out[i].d;
    }
    return {NetState::from_array(value), rate};
}

NetState predict_step(const ModelParams& params, const NetState& s, const ControlInput& u,
                      double T) {
    return forward(params, s, u, T);
}

NetState predict_step(const ModelParams& params, const StateVector& s, const ControlInput& u,
                      double T) {
    return forward(params, to_net_state(s), u, T);
}

std::vector<NetState> rollout(const ModelParams& params, const NetState& s0,
                              std::span<const ControlInput> controls, double T) {
    std::vector<NetState> out;
    out.reserve(controls.size());
    NetState cur = s0;
    for (std::size_t k = 0; k < controls.size(); ++k) {
        try {
            cur = predict_step(params, cur, controls[k], T);
        } catch (const NumericError& e) {
            throw NumericError("rollout: step " + std::to_string(k + 1) + ": " + e.what());
        }
        if (params.config.renormalize_yaw_on_rollout) {
            const double n = std::sqrt(cur.cos_psi * cur.cos_psi + cur.sin_psi * cur.sin_psi);
            if (n > 0.0) {
                cur.cos_psi /= n;
                cur.sin_psi /= n;
            }
        }
        out.push_back(cur);
    }
    return out;
}

namespace {

std::vector<double> slice(const std::vector<double>& flat, std::size_t off, std::size_t n) {
    return std::vector<double>(flat.begin() + off, flat.begin() + off + n);
}

ordered_json config_to_json(const ModelConfig& cfg) {
    ordered_json j;
    j["n_hidden_layers"] = cfg.n_hidden_layers;
    j["hidden_width"] = cfg.hidden_width;
    j["activation"] = activation_name(cfg.activation);
    j["layer_norm_every_2nd"] = cfg.layer_norm_every_2nd;
    j["residual_connection"] = cfg.residual_connection;
    j["rotate_planar_increments"] = cfg.rotate_planar_increments;
    j["renormalize_yaw_on_rollout"] = cfg.renormalize_yaw_on_rollout;
    return j;
}

ModelConfig config_from_json(const ordered_json& j) {
    ModelConfig cfg;
    cfg.n_hidden_layers = j.at("n_hidden_layers").get<int>();
    cfg.hidden_width = j.at("hidden_width").get<int>();
    cfg.activation = activation_from_name(j.at("activation").get<std::string>());
    cfg.layer_norm_every_2nd = j.at("layer_norm_every_2nd").get<bool>();
    cfg.residual_connection = j.at("residual_connection").get<bool>();
    cfg.rotate_planar_increments = j.at("rotate_planar_increments").get<bool>();
    cfg.renormalize_yaw_on_rollout = j.at("renormalize_yaw_on_rollout").get<bool>();
    return cfg;
}

} // namespace

void save_checkpoint(const std::filesystem::path& file, const ModelParams& params) {
    ordered_json j;
    j["format"] = "pinc-checkpoint";
    j["ordering"] = kParamOrderingTag;
    j["config"] = config_to_json(params.config);
    ordered_json layers = ordered_json::array();
    for (const auto& lay : params.layout.layers) {
        ordered_json lj;
        lj["w"] = slice(params.flat, lay.w,
                        static_cast<std::size_t>(params.config.hidden_width) * lay.in_dim);
        lj["b"] = slice(params.flat, lay.b, params.config.hidden_width);
        lj["beta"] = params.flat[lay.beta];
        if (lay.normalized) {
            lj["ln_gain"] = slice(params.flat, lay.gain, params.config.hidden_width);
            lj["ln_offset"] = slice(params.flat, lay.offset, params.config.hidden_width);
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    ordered_json out;
    const int in_dim = params.layout.layers.empty() ? kInputDim : params.config.hidden_width;
    out["w"] = slice(params.flat, params.layout.out_w,
                     static_cast<std::size_t>(kNetStateDim) * in_dim);
    out["b"] = slice(params.flat, params.layout.out_b, kNetStateDim);
    j["output"] = std::move(out);

    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write checkpoint file " + file.string());
    os << j.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot read checkpoint file " + file.string());
    ordered_json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw ConfigError("checkpoint " + file.string() + ": invalid JSON: " + e.what());
    }
    if (j.value("format", "") != "pinc-checkpoint") {
        throw ConfigError("checkpoint " + file.string() + ": unrecognized format");
    }
    if (j.value("ordering", "") != kParamOrderingTag) {
        throw ConfigError("checkpoint " + file.string() + ": parameter ordering tag '" +
                          j.value("ordering", "") + "' does not match " + kParamOrderingTag);
    }
    ModelParams p;
    p.config = config_from_json(j.at("config"));
    p.layout = ParamLayout::make(p.config);
    p.flat.assign(p.layout.total, 0.0);

    auto fill = [&](const ordered_json& arr, std::size_t off, std::size_t n,
                    const std::string& what) {
        if (!arr.is_array() || arr.size() != n) {
            throw ConfigError("checkpoint " + file.string() + ": " + what + " expects " +
                              std::to_string(n) + " values, got " +
                              std::to_string(arr.is_array() ? arr.size() : 0));
        }
        for (std::size_t i = 0; i < n; ++i) p.flat[off + i] = arr[i].get<double>();
    };

    const auto& layers = j.at("layers");
    if (!layers.is_array() || static_cast<int>(layers.size()) != p.config.n_hidden_layers) {
        throw ConfigError("checkpoint " + file.string() + ": layer count mismatch with config");
    }
    for (int l = 0; l < p.config.n_hidden_layers; ++l) {
        const auto& lj = layers[l];
        const auto& lay = p.layout.layers[l];
        const std::string tag = "layer " + std::to_string(l + 1);
        fill(lj.at("w"), lay.w, static_cast<std::size_t>(p.config.hidden_width) * lay.in_dim,
             tag + " w");
        fill(lj.at("b"), lay.b, p.config.hidden_width, tag + " b");
        p.flat[lay.beta] = lj.at("beta").get<double>();
        if (lay.normalized) {
            fill(lj.at("ln_gain"), lay.gain, p.config.hidden_width, tag + " ln_gain");
            fill(lj.at("ln_offset"), lay.offset, p.config.hidden_width, tag + " ln_offset");
        }
    }
    const int in_dim = p.layout.layers.empty() ? kInputDim : p.config.hidden_width;
    fill(j.at("output").at("w"), p.layout.out_w,
         static_cast<std::size_t>(kNetStateDim) * in_dim, "output w");
    fill(j.at("output").at("b"), p.layout.out_b, kNetStateDim, "output b");
    return p;
}

} // namespace pinc
