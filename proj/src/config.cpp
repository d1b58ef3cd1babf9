#include "pinc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pinc {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

} // namespace

std::optional<std::string> KeyValues::raw(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    auto v = raw(key);
    return v ? *v : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(source_ + ": key '" + key + "': expected a number, got '" + *v + "'");
    }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
    const double d = get_double(key, static_cast<double>(fallback));
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
        throw ConfigError(source_ + ": key '" + key + "': expected an integer");
    }
    return i;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        unsigned long long out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(source_ + ": key '" + key + "': expected an unsigned integer, got '" +
                          *v + "'");
    }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    auto v = raw(key);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), ::tolower);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(source_ + ": key '" + key + "': expected a boolean, got '" + *v + "'");
}

void KeyValues::require_all_used() const {
    for (const auto& [key, value] : kv_) {
        if (!used_.count(key)) {
            throw ConfigError(source_ + ": unknown key '" + key + "'");
        }
    }
}

ConfigFile parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    ConfigFile out;
    out.top = KeyValues(path.string());
    KeyValues* current = &out.top;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            out.sections.emplace_back(name, KeyValues(path.string() + " [" + name + "]"));
            current = &out.sections.back().second;
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        }
        current->set(key, value);
    }
    return out;
}

KeyValues parse_kv_file(const std::filesystem::path& path) {
    ConfigFile f = parse_config_file(path);
    if (!f.sections.empty()) {
        throw ConfigError(path.string() + ": sections are not allowed in this file");
    }
    return f.top;
}

PhysicalParams physical_params_from_kv(const KeyValues& kv) {
    PhysicalParams p;
    p.m = kv.get_double("m", p.m);
    p.I_zz = kv.get_double("I_zz", p.I_zz);
    p.g = kv.get_double("g", p.g);
    p.rho_water = kv.get_double("rho_water", p.rho_water);
    p.V_sub = kv.get_double("V_sub", p.V_sub);
    p.X_du = kv.get_double("X_du", p.X_du);
    p.Y_dv = kv.get_double("Y_dv", p.Y_dv);
    p.Z_dw = kv.get_double("Z_dw", p.Z_dw);
    p.N_dr = kv.get_double("N_dr", p.N_dr);
    p.X_u = kv.get_double("X_u", p.X_u);
    p.Y_v = kv.get_double("Y_v", p.Y_v);
    p.Z_w = kv.get_double("Z_w", p.Z_w);
    p.N_r = kv.get_double("N_r", p.N_r);
    p.X_uu = kv.get_double("X_uu", p.X_uu);
    p.Y_vv = kv.get_double("Y_vv", p.Y_vv);
    p.Z_ww = kv.get_double("Z_ww", p.Z_ww);
    p.N_rr = kv.get_double("N_rr", p.N_rr);
    kv.require_all_used();
    p.validate();
    return p;
}

PhysicalParams load_physical_params(const std::filesystem::path& path) {
    return physical_params_from_kv(parse_kv_file(path));
}

void apply_gen_kv(GenConfig& cfg, const KeyValues& kv,
                  const std::filesystem::path& base_dir) {
    cfg.seed = kv.get_u64("seed", cfg.seed);
    cfg.n_trajectories = kv.get_int("n_trajectories", cfg.n_trajectories);
    cfg.T = kv.get_double("T", cfg.T);
    cfg.n_steps = kv.get_int("n_steps", cfg.n_steps);
    cfg.n_colloc = kv.get_int("n_colloc", cfg.n_colloc);
    cfg.substeps = kv.get_int("substeps", cfg.substeps);
    if (auto kind = kv.raw("input_kind")) cfg.input.kind = input_kind_from_name(*kind);
    cfg.input.amplitude = kv.get_double("amplitude", cfg.input.amplitude);
    cfg.input.f_lo = kv.get_double("f_lo", cfg.input.f_lo);
    cfg.input.f_hi = kv.get_double("f_hi", cfg.input.f_hi);
    cfg.input.phase_lo = kv.get_double("phase_lo", cfg.input.phase_lo);
    cfg.input.phase_hi = kv.get_double("phase_hi", cfg.input.phase_hi);
    cfg.input.offset_variance = kv.get_double("offset_variance", cfg.input.offset_variance);
    cfg.input.sign_probability = kv.get_double("sign_probability", cfg.input.sign_probability);
    cfg.ranges.x_max = kv.get_double("x_max", cfg.ranges.x_max);
    cfg.ranges.y_max = kv.get_double("y_max", cfg.ranges.y_max);
    cfg.ranges.z_max = kv.get_double("z_max", cfg.ranges.z_max);
    cfg.ranges.psi_max = kv.get_double("psi_max", cfg.ranges.psi_max);
    cfg.ranges.u_max = kv.get_double("u_max", cfg.ranges.u_max);
    cfg.ranges.v_max = kv.get_double("v_max", cfg.ranges.v_max);
    cfg.ranges.w_max = kv.get_double("w_max", cfg.ranges.w_max);
    cfg.ranges.r_max = kv.get_double("r_max", cfg.ranges.r_max);
    if (auto params_file = kv.raw("params_file")) {
        std::filesystem::path p(*params_file);
        if (p.is_relative()) p = base_dir / p;
        cfg.phys = load_physical_params(p);
    }
    kv.require_all_used();
    cfg.validate();
}

GenConfig load_gen_config(const std::filesystem::path& path) {
    GenConfig cfg;
    apply_gen_kv(cfg, parse_kv_file(path), path.parent_path());
    return cfg;
}

void apply_train_kv(TrainConfig& cfg, const KeyValues& kv) {
    cfg.seed = kv.get_u64("seed", cfg.seed);
    if (kv.has("model_seed")) cfg.model_seed = kv.get_u64("model_seed", 0);
    cfg.n_epochs = kv.get_int("n_epochs", cfg.n_epochs);
    cfg.batch_size = kv.get_int("batch_size", cfg.batch_size);
    cfg.lr0 = kv.get_double("lr0", cfg.lr0);
    cfg.scheduler = kv.get_bool("scheduler", cfg.scheduler);
    cfg.lr_min = kv.get_double("lr_min", cfg.lr_min);
    cfg.patience = kv.get_int("patience", cfg.patience);
    cfg.lr_factor = kv.get_double("lr_factor", cfg.lr_factor);
    cfg.adamw.beta1 = kv.get_double("adam_beta1", cfg.adamw.beta1);
    cfg.adamw.beta2 = kv.get_double("adam_beta2", cfg.adamw.beta2);
    cfg.adamw.eps = kv.get_double("adam_eps", cfg.adamw.eps);
    cfg.adamw.weight_decay = kv.get_double("weight_decay", cfg.adamw.weight_decay);
    if (auto losses = kv.raw("losses")) {
        cfg.losses.clear();
        std::stringstream ss(*losses);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) cfg.losses.push_back(loss_from_name(tok));
        }
    }
    cfg.weights.w_data = kv.get_double("w_data", cfg.weights.w_data);
    cfg.weights.w_roll = kv.get_double("w_roll", cfg.weights.w_roll);
    cfg.weights.w_phy = kv.get_double("w_phy", cfg.weights.w_phy);
    cfg.weights.w_phy_roll = kv.get_double("w_phy_roll", cfg.weights.w_phy_roll);
    cfg.weights.w_ic = kv.get_double("w_ic", cfg.weights.w_ic);
    cfg.weights.n_pred = kv.get_int("n_pred", cfg.weights.n_pred);
    if (auto scheme = kv.raw("grad_scheme")) cfg.grad_scheme = grad_scheme_from_name(*scheme);
    cfg.clip = kv.get_double("clip", cfg.clip);
    cfg.clip_all_schemes = kv.get_bool("clip_all_schemes", cfg.clip_all_schemes);
    cfg.noise_sigma = kv.get_double("noise_sigma", cfg.noise_sigma);
    cfg.noise_per_trajectory = kv.get_bool("noise_per_trajectory", cfg.noise_per_trajectory);
    cfg.colloc_points = kv.get_int("colloc_points", cfg.colloc_points);
    cfg.shuffle = kv.get_bool("shuffle", cfg.shuffle);
    cfg.checkpoint_every = kv.get_int("checkpoint_every", cfg.checkpoint_every);
    cfg.jobs = kv.get_int("jobs", cfg.jobs);
    cfg.model.n_hidden_layers = kv.get_int("n_hidden_layers", cfg.model.n_hidden_layers);
    cfg.model.hidden_width = kv.get_int("hidden_width", cfg.model.hidden_width);
    if (auto act = kv.raw("activation")) cfg.model.activation = activation_from_name(*act);
    cfg.model.layer_norm_every_2nd =
        kv.get_bool("layer_norm_every_2nd", cfg.model.layer_norm_every_2nd);
    cfg.model.residual_connection =
        kv.get_bool("residual_connection", cfg.model.residual_connection);
    cfg.model.rotate_planar_increments =
        kv.get_bool("rotate_planar_increments", cfg.model.rotate_planar_increments);
    cfg.model.renormalize_yaw_on_rollout =
        kv.get_bool("renormalize_yaw_on_rollout", cfg.model.renormalize_yaw_on_rollout);
    kv.require_all_used();
    cfg.validate();
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    TrainConfig cfg;
    apply_train_kv(cfg, parse_kv_file(path));
    return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    if (cfg.model_seed) j["model_seed"] = *cfg.model_seed;
    j["n_epochs"] = cfg.n_epochs;
    j["batch_size"] = cfg.batch_size;
    j["lr0"] = cfg.lr0;
    j["scheduler"] = cfg.scheduler;
    j["lr_min"] = cfg.lr_min;
    j["patience"] = cfg.patience;
    j["lr_factor"] = cfg.lr_factor;
    j["adam_beta1"] = cfg.adamw.beta1;
    j["adam_beta2"] = cfg.adamw.beta2;
    j["adam_eps"] = cfg.adamw.eps;
    j["weight_decay"] = cfg.adamw.weight_decay;
    std::string losses;
    for (LossKind k : cfg.losses) {
        if (!losses.empty()) losses += ",";
        losses += loss_name(k);
    }
    j["losses"] = losses;
    j["w_data"] = cfg.weights.w_data;
    j["w_roll"] = cfg.weights.w_roll;
    j["w_phy"] = cfg.weights.w_phy;
    j["w_phy_roll"] = cfg.weights.w_phy_roll;
    j["w_ic"] = cfg.weights.w_ic;
    j["n_pred"] = cfg.weights.n_pred;
    j["grad_scheme"] = grad_scheme_name(cfg.grad_scheme);
    j["clip"] = cfg.clip;
    j["clip_all_schemes"] = cfg.clip_all_schemes;
    j["noise_sigma"] = cfg.noise_sigma;
    j["noise_per_trajectory"] = cfg.noise_per_trajectory;
    j["colloc_points"] = cfg.colloc_points;
    j["shuffle"] = cfg.shuffle;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["jobs"] = cfg.jobs;
    j["n_hidden_layers"] = cfg.model.n_hidden_layers;
    j["hidden_width"] = cfg.model.hidden_width;
    j["activation"] = activation_name(cfg.model.activation);
    j["layer_norm_every_2nd"] = cfg.model.layer_norm_every_2nd;
    j["residual_connection"] = cfg.model.residual_connection;
    j["rotate_planar_increments"] = cfg.model.rotate_planar_increments;
    j["renormalize_yaw_on_rollout"] = cfg.model.renormalize_yaw_on_rollout;
    return j.dump(2);
}

KeyValues overrides_from_tokens(const std::vector<std::string>& tokens) {
    KeyValues kv("command line");
    for (const std::string& tok : tokens) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("override '" + tok + "' is not of the form key=value");
        }
        kv.set(trim(tok.substr(0, eq)), unquote(trim(tok.substr(eq + 1))));
    }
    return kv;
}

} // namespace pinc
