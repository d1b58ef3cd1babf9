#include "pinc/datagen.hpp"

#include <json.hpp>

#include "pinc/dynamics.hpp"

namespace pinc {

using ordered_json = nlohmann::ordered_json;

std::string input_kind_name(InputKind k) {
    return k == InputKind::Ramp ? "ramp" : "sine";
}

InputKind input_kind_from_name(const std::string& name) {
    if (name == "ramp") return InputKind::Ramp;
    if (name == "sine") return InputKind::Sine;
    throw ConfigError("unknown input kind '" + name + "' (expected ramp or sine)");
}

StateVector sample_initial_state(const SamplingRanges& ranges, Rng& rng) {
    StateVector s;
    s.x = rng.uniform(-ranges.x_max, ranges.x_max);
    s.y = rng.uniform(-ranges.y_max, ranges.y_max);
    s.z = rng.uniform(-ranges.z_max, ranges.z_max);
    s.psi = rng.uniform(-ranges.psi_max, ranges.psi_max);
    s.u = rng.uniform(-ranges.u_max, ranges.u_max);
    s.v = rng.uniform(-ranges.v_max, ranges.v_max);
    s.w = rng.uniform(0.0, ranges.w_max); // diving behavior: w >= 0
    s.r = rng.uniform(-ranges.r_max, ranges.r_max);
    return s;
}

double ramp_value(double t, double T_tot) {
    if (T_tot <= 0.0) return 0.0;
    const double frac = t / T_tot;
    return frac <= 0.5 ? 2.0 * frac : 2.0 * (1.0 - frac);
}

ChannelRecord make_ramp_channel(Rng& rng, const InputSpec& spec) {
    ChannelRecord ch;
    ch.kind = "ramp";
    ch.offset = rng.normal(0.0, std::sqrt(spec.offset_variance));
    ch.sign = rng.bernoulli(spec.sign_probability) ? 1.0 : -1.0;
    return ch;
}

ChannelRecord make_sine_channel(Rng& rng, const InputSpec& spec) {
    ChannelRecord ch;
    ch.kind = "sine";
    ch.amplitude = spec.amplitude;
    ch.frequency = rng.uniform(spec.f_lo, spec.f_hi);
    ch.phase = rng.uniform(spec.phase_lo, spec.phase_hi);
    return ch;
}

double eval_channel(const ChannelRecord& ch, double t, double T_tot) {
    if (ch.kind == "ramp") {
        return ch.sign * ramp_value(t, T_tot) + ch.offset;
    }
    return ch.amplitude * std::sin(kTwoPi * ch.frequency * t + ch.phase);
}

ControlInput scale_controls(const std::array<double, 4>& raw) {
    ControlInput c;
    c.X = raw[0];
    c.Y = 0.1 * raw[1];
    c.Z = std::abs(5.0 * raw[2]);
    c.Psi = 0.05 * raw[3];
    return c;
}

std::vector<double> lhs_collocation(int n_points, double T, Rng& rng) {
    if (n_points < 1) throw ConfigError("lhs_collocation: n_points must be >= 1");
    const double width = T / static_cast<double>(n_points);
    std::vector<double> points(n_points);
    for (int i = 0; i < n_points; ++i) {
        points[i] = (static_cast<double>(i) + rng.uniform01()) * width;
    }
    rng.shuffle(points);
    return points;
}

namespace {

ordered_json gen_config_echo(const GenConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["n_trajectories"] = cfg.n_trajectories;
    j["T"] = cfg.T;
    j["n_steps"] = cfg.n_steps;
    j["n_colloc"] = cfg.n_colloc;
    j["substeps"] = cfg.substeps;
    j["input_kind"] = input_kind_name(cfg.input.kind);
    j["amplitude"] = cfg.input.amplitude;
    j["f_lo"] = cfg.input.f_lo;
    j["f_hi"] = cfg.input.f_hi;
    j["phase_lo"] = cfg.input.phase_lo;
    j["phase_hi"] = cfg.input.phase_hi;
    j["offset_variance"] = cfg.input.offset_variance;
    j["sign_probability"] = cfg.input.sign_probability;
    j["x_max"] = cfg.ranges.x_max;
    j["y_max"] = cfg.ranges.y_max;
    j["z_max"] = cfg.ranges.z_max;
    j["psi_max"] = cfg.ranges.psi_max;
    j["u_max"] = cfg.ranges.u_max;
    j["v_max"] = cfg.ranges.v_max;
    j["w_max"] = cfg.ranges.w_max;
    j["r_max"] = cfg.ranges.r_max;
    return j;
}

} // namespace

Dataset generate_dataset(const GenConfig& config) {
    config.validate();
    Dataset ds;
    ds.T = config.T;
    ds.n_steps = config.n_steps;
    ds.n_colloc = config.n_colloc;
    ds.seed = config.seed;
    ds.rng_algorithm = Rng::kAlgorithm;
    ds.phys = config.phys;
    ds.config_echo_json = gen_config_echo(config).dump();

    const double T_tot = config.total_time();
    const int n_intervals = config.n_steps - 1;
    for (int i = 0; i < config.n_trajectories; ++i) {
        Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(i));
        const StateVector x0 = sample_initial_state(config.ranges, rng);

        TrajectoryRecord rec;
        for (int c = 0; c < 4; ++c) {
            rec.channels[c] = config.input.kind == InputKind::Ramp
                                  ? make_ramp_channel(rng, config.input)
                                  : make_sine_channel(rng, config.input);
        }

        std::vector<ControlInput> controls(n_intervals);
        for (int n = 0; n < n_intervals; ++n) {
            const double t = static_cast<double>(n) * config.T;
            std::array<double, 4> raw;
            for (int c = 0; c < 4; ++c) raw[c] = eval_channel(rec.channels[c], t, T_tot);
            controls[n] = scale_controls(raw);
        }

        Trajectory traj = simulate_trajectory(x0, controls, config.phys, config.T,
                                              config.substeps);
        traj.colloc.reserve(n_intervals);
        for (int n = 0; n < n_intervals; ++n) {
            traj.colloc.push_back(lhs_collocation(config.n_colloc, config.T, rng));
        }
        ds.trajectories.push_back(std::move(traj));
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

} // namespace pinc
